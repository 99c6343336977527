#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wsosvm/image.hpp"
#include "wsosvm/rng.hpp"

using namespace wsosvm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / "wsosvm-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("plane round-trips bit-exactly") {
    rng::Stream stream(5, "test/plane");
    image::Plane plane(13, 9);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 13; ++c)
            plane.at(r, c) = static_cast<float>(stream.uniform(-100.0, 100.0));
    plane.at(2, 3) = 0.1f;  // not exactly representable in decimal

    fs::path dir = temp_dir("plane");
    image::write_plane(plane, dir / "p.plane");
    image::Plane back = image::read_plane(dir / "p.plane");
    REQUIRE(back.width() == plane.width());
    REQUIRE(back.height() == plane.height());
    CHECK(back.data() == plane.data());
}

TEST_CASE("plane reader rejects foreign and truncated files") {
    fs::path dir = temp_dir("plane-bad");
    {
        std::ofstream out(dir / "bad.plane", std::ios::binary);
        out << "WSOPLANE 2 4 4\n";
    }
    CHECK_THROWS_AS(image::read_plane(dir / "bad.plane"), DataError);
    {
        std::ofstream out(dir / "short.plane", std::ios::binary);
        out << "WSOPLANE 1 4 4\n";
        float v = 1.0f;
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    CHECK_THROWS_AS(image::read_plane(dir / "short.plane"), DataError);
    CHECK_THROWS_AS(image::read_plane(dir / "missing.plane"), DataError);
}

TEST_CASE("stack manifest round-trips") {
    image::ContrastStack stack;
    stack.width = 16;
    stack.height = 12;
    stack.channel_names = {"T1+C", "T2"};
    rng::Stream stream(6, "test/stack");
    for (int ch = 0; ch < 2; ++ch) {
        image::Plane plane(16, 12);
        for (auto& v : plane.data()) v = static_cast<float>(stream.next_double());
        stack.channels.push_back(plane);
    }
    stack.mask_ce = image::Plane(16, 12);
    stack.mask_ne = image::Plane(16, 12);
    stack.mask_necrosis = image::Plane(16, 12);
    stack.mask_contralateral = image::Plane(16, 12);
    stack.mask_ce.at(5, 9) = 1.0f;
    stack.mask_ne.at(6, 9) = 1.0f;
    stack.truth_genes = {"EGFR"};
    image::Plane truth(16, 12);
    truth.at(5, 9) = 2.0f;
    stack.truth.push_back(truth);

    fs::path dir = temp_dir("stack");
    image::write_stack(stack, dir / "stack.manifest");
    image::ContrastStack back = image::read_stack(dir / "stack.manifest");
    CHECK(back.channel_names == stack.channel_names);
    CHECK(back.channels[0].data() == stack.channels[0].data());
    CHECK(back.channels[1].data() == stack.channels[1].data());
    CHECK(back.mask_ce.data() == stack.mask_ce.data());
    CHECK(back.truth_genes == stack.truth_genes);
    CHECK(back.truth[0].data() == stack.truth[0].data());
    CHECK(back.channel_index("T2") == 1);
    CHECK(back.channel_index("FA") == -1);
    CHECK(back.truth_index("EGFR") == 0);
    CHECK(back.in_aoi(5, 9));
    CHECK_FALSE(back.in_aoi(0, 0));
}
