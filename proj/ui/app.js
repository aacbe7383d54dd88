// Rater front end. Holds no protocol state beyond the current view: the tournament id
// lives in the URL hash and everything else is fetched from the service.
"use strict";

const $ = (id) => document.getElementById(id);
let busy = false;
let retryAction = null;
let mosQueue = [];

function show(screen) {
  for (const s of document.querySelectorAll(".screen")) s.hidden = s.id !== screen;
}

function fail(message, action) {
  retryAction = action;
  $("error").querySelector("span").textContent = message;
  $("error").hidden = false;
}

async function api(method, path, body) {
  const res = await fetch(path, {
    method,
    headers: body ? { "Content-Type": "application/json" } : {},
    body: body ? JSON.stringify(body) : undefined,
  });
  const data = await res.json().catch(() => ({}));
  if (!res.ok) {
    const err = new Error(data.error || res.statusText);
    err.status = res.status;
    throw err;
  }
  return data;
}

// One request at a time; a failed request can be retried without side effects because
// the service rejects anything that no longer matches its state.
async function run(action) {
  if (busy) return;
  busy = true;
  $("error").hidden = true;
  for (const b of document.querySelectorAll("button")) b.disabled = true;
  try {
    await action();
  } catch (e) {
    fail(e.message, () => run(action));
  } finally {
    busy = false;
    for (const b of document.querySelectorAll("button")) b.disabled = false;
  }
}

// --- synchronized zoom and pan -------------------------------------------------
const view = { scale: 1, x: 0, y: 0 };

function applyView() {
  for (const img of document.querySelectorAll(".pane img")) {
    img.style.transform = `translate(${view.x}px, ${view.y}px) scale(${view.scale})`;
  }
}

function resetView() {
  view.scale = 1;
  view.x = 0;
  view.y = 0;
  applyView();
}

for (const pane of document.querySelectorAll(".pane")) {
  pane.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = pane.getBoundingClientRect();
    const px = ev.clientX - rect.left, py = ev.clientY - rect.top;
    const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
    const next = Math.min(16, Math.max(1, view.scale * factor));
    view.x = px - ((px - view.x) * next) / view.scale;
    view.y = py - ((py - view.y) * next) / view.scale;
    view.scale = next;
    if (next === 1) view.x = view.y = 0;
    applyView();
  });
  let drag = null;
  pane.addEventListener("mousedown", (ev) => { drag = { x: ev.clientX - view.x, y: ev.clientY - view.y }; });
  window.addEventListener("mouseup", () => { drag = null; });
  pane.addEventListener("mousemove", (ev) => {
    if (!drag) return;
    view.x = ev.clientX - drag.x;
    view.y = ev.clientY - drag.y;
    applyView();
  });
}

// --- tournament ----------------------------------------------------------------
let current = null;
let sides = { left: null, right: null };

function render(t) {
  current = t;
  location.hash = "t=" + encodeURIComponent(t.tournament_id);
  $("progress").textContent = "";
  if (t.pair) {
    // Random left/right placement per pair, so position carries no information.
    const flip = Math.random() < 0.5;
    sides.left = t.pair[flip ? 1 : 0];
    sides.right = t.pair[flip ? 0 : 1];
    $("raw").src = t.raw_url;
    $("left").src = sides.left.url;
    $("right").src = sides.right.url;
    $("progress").textContent = `${t.progress.done + 1}/${t.progress.total}`;
    resetView();
    show("compare");
  } else if (t.awaiting_satisfaction) {
    $("best").src = "/results/" + encodeURIComponent(t.final_pick);
    resetView();
    show("label");
  } else {
    show("done");
  }
}

function choose(side) {
  const chosen = sides[side];
  const id = current.tournament_id;
  run(async () => render(await api("POST", `/tournaments/${encodeURIComponent(id)}/choice`, { candidate_id: chosen.candidate_id })));
}

$("pick-left").addEventListener("click", () => choose("left"));
$("pick-right").addEventListener("click", () => choose("right"));

for (const b of document.querySelectorAll("#label button")) {
  b.addEventListener("click", () => {
    const id = current.tournament_id;
    run(async () => render(await api("POST", `/tournaments/${encodeURIComponent(id)}/satisfaction`, { label: b.dataset.label })));
  });
}

// --- MOS scoring ---------------------------------------------------------------
let mosContext = null;

function nextMos() {
  const c = mosQueue.shift();
  if (!c) {
    show("done");
    return;
  }
  mosContext.candidate = c;
  $("mos-image").src = c.url;
  resetView();
  show("mos");
}

for (const b of document.querySelectorAll("#mos-scale button")) {
  b.addEventListener("click", () => {
    const { image, rater, candidate } = mosContext;
    run(async () => {
      await api("POST", "/mos", { image_id: image, rater_id: rater, candidate_id: candidate.candidate_id, score: Number(b.dataset.score) });
      nextMos();
    });
  });
}

// --- start / resume ------------------------------------------------------------
$("start-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const form = new FormData(ev.target);
  const rater = form.get("rater"), image = form.get("image");
  if (ev.submitter && ev.submitter.value === "mos") {
    run(async () => {
      const img = await api("GET", `/images/${encodeURIComponent(image)}`);
      mosQueue = img.candidates.slice().sort(() => Math.random() - 0.5);
      mosContext = { image, rater, candidate: null };
      nextMos();
    });
  } else {
    run(async () => render(await api("POST", "/tournaments", { image_id: image, rater_id: rater })));
  }
});

$("retry").addEventListener("click", () => retryAction && retryAction());

const resume = /t=([^&]+)/.exec(location.hash);
if (resume) {
  run(async () => render(await api("GET", `/tournaments/${resume[1]}`)));
} else {
  show("start");
}
