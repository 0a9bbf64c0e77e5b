// Regenerates the bundled test images: one 512x512 textured original plus a
// set of clean 256x256 textures. Seeds are fixed so the output is stable.
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cmfd/image_io.hpp"
#include "cmfd/texture.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the bundled procedural test images"};
    std::string out_dir = "testdata";
    int clean_count = 20;
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--clean-count", clean_count, "Number of clean images")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir + "/clean");
        cmfd::write_gray(cmfd::synth_texture(512, 512, 20240001),
                         out_dir + "/textured_512.png");
        for (int i = 0; i < clean_count; ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "%s/clean/clean_%02d.png", out_dir.c_str(), i);
            cmfd::write_gray(cmfd::synth_texture(256, 256, 30000100 + i), name);
        }
        std::cout << "wrote " << out_dir << "/textured_512.png and " << clean_count
                  << " clean images\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
