#pragma once

#include <filesystem>
#include <string>

#include "test_util.hpp"
#include "uwbench/image_io.hpp"
#include "uwbench/synthetic.hpp"

namespace uwtest {

// Five synthetic underwater images under dir: three with references, two tagged
// challenging. Returns the manifest path.
inline fs::path write_corpus(const fs::path& dir, int w = 48, int h = 40) {
    fs::create_directories(dir / "raw");
    fs::create_directories(dir / "ref");
    std::string manifest = "# synthetic corpus\n";
    for (int i = 0; i < 5; ++i) {
        const std::string name = "img" + std::to_string(i);
        const uw::ImageBuf clean = uw::synthetic_scene(w, h, 500 + i);
        uw::save_image(uw::underwater_cast(clean), dir / "raw" / (name + ".png"));
        if (i < 3) {
            uw::save_image(clean, dir / "ref" / (name + ".png"));
            manifest += "{\"raw\": \"raw/" + name + ".png\", \"reference\": \"ref/" + name + ".png\"}\n";
        } else {
            manifest += "{\"raw\": \"raw/" + name + ".png\", \"tags\": [\"challenging\"]}\n";
        }
    }
    write_file(dir / "manifest.jsonl", manifest);
    return dir / "manifest.jsonl";
}

}  // namespace uwtest
