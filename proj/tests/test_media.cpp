#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pfm/media.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace pfm;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pfm_media_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_raw_pgm(const fs::path& file, int w, int h, unsigned char value) {
    std::ofstream out(file, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(std::size_t(w) * h, value);
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

}  // namespace

TEST_CASE("load_sequence orders frames by numeric stem and keeps count") {
    const fs::path dir = temp_dir("order");
    fs::create_directories(dir / "cam0");
    for (int i = 0; i < 50; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%03d.pgm", i);
        write_raw_pgm(dir / "cam0" / name, 320, 240, static_cast<unsigned char>(i));
    }
    const FrameSequence seq = load_sequence(dir, "cam0");
    CHECK(seq.frames.size() == 50);
    CHECK(seq.width() == 320);
    CHECK(seq.height() == 240);
    CHECK_FALSE(seq.mirrored);
    for (int i = 0; i < 50; ++i) {
        CHECK(seq.frames[std::size_t(i)].index == i);
        CHECK(seq.frames[std::size_t(i)].gray[0] == doctest::Approx(i / 255.0).epsilon(1e-6));
    }
}

TEST_CASE("load_sequence single all-zero 16x16 frame") {
    const fs::path dir = temp_dir("zero");
    write_raw_pgm(dir / "0.pgm", 16, 16, 0);
    const FrameSequence seq = load_sequence(dir, "");
    REQUIRE(seq.frames.size() == 1);
    for (float v : seq.frames[0].gray) CHECK(v == 0.0f);
}

TEST_CASE("PPM with R=G=B=128 yields gray near 0.50196") {
    const fs::path dir = temp_dir("ppm");
    {
        std::ofstream out(dir / "000.ppm", std::ios::binary);
        out << "P6\n16 16\n255\n";
        std::vector<unsigned char> raw(16 * 16 * 3, 128);
        out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
    }
    const FrameSequence seq = load_sequence(dir, "");
    REQUIRE(seq.frames.size() == 1);
    REQUIRE(seq.frames[0].has_color());
    // luminance oracle: 0.299*v + 0.587*v + 0.114*v with v = 128/255
    const double expected = (0.299 + 0.587 + 0.114) * (128.0 / 255.0);
    for (float v : seq.frames[0].gray) CHECK(v == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("load_sequence error cases") {
    CHECK_THROWS(load_sequence("/nonexistent/path/here", "cam0"));

    const fs::path dir = temp_dir("mixed");
    write_raw_pgm(dir / "000.pgm", 32, 32, 10);
    write_raw_pgm(dir / "001.pgm", 16, 16, 10);
    CHECK_THROWS_WITH_AS(load_sequence(dir, ""), doctest::Contains("001.pgm"), std::runtime_error);

    const fs::path dir2 = temp_dir("trunc");
    {
        std::ofstream out(dir2 / "000.pgm", std::ios::binary);
        out << "P5\n32 32\n255\n";
        out << "short";
    }
    CHECK_THROWS_WITH_AS(load_sequence(dir2, ""), doctest::Contains("truncated"), std::runtime_error);

    const fs::path dir3 = temp_dir("empty");
    CHECK_THROWS(load_sequence(dir3, ""));
}

TEST_CASE("mirror is an involution and reflects pixels") {
    Frame f = pfm_test::constant_frame(10, 8, 0.0f);
    f.at(2, 5) = 1.0f;
    FrameSequence seq;
    seq.frames.push_back(f);
    seq.camera_id = "camX";
    seq.subject_id = "subj";

    const FrameSequence m = mirror_sequence(seq);
    CHECK(m.mirrored);
    CHECK(m.camera_id == "camX");
    CHECK(m.subject_id == "subj");
    CHECK(m.frames[0].at(7, 5) == 1.0f);
    CHECK(m.frames[0].at(2, 5) == 0.0f);

    const FrameSequence back = mirror_sequence(m);
    CHECK_FALSE(back.mirrored);
    CHECK(back.frames[0].gray == seq.frames[0].gray);  // bit-exact involution
}

TEST_CASE("mirror of a constant frame is identical") {
    FrameSequence seq;
    seq.frames.push_back(pfm_test::constant_frame(17, 9, 0.25f));
    const FrameSequence m = mirror_sequence(seq);
    CHECK(m.frames[0].gray == seq.frames[0].gray);
}

TEST_CASE("mirror round-trips color planes bit-exactly") {
    Frame f = pfm_test::constant_frame(16, 16, 0.5f);
    f.color.resize(16 * 16 * 3);
    Rng rng(3);
    for (float& v : f.color) v = float(rng.uniform());
    FrameSequence seq;
    seq.frames.push_back(f);
    const FrameSequence twice = mirror_sequence(mirror_sequence(seq));
    CHECK(twice.frames[0].color == f.color);
}

TEST_CASE("pgm write/read round trip") {
    const fs::path dir = temp_dir("roundtrip");
    Frame f = pfm_test::constant_frame(20, 16, 0.0f);
    Rng rng(11);
    for (float& v : f.gray) v = float(int(rng.uniform() * 255.0) / 255.0);
    write_pgm(dir / "0.pgm", f);
    const Frame back = read_pnm(dir / "0.pgm");
    REQUIRE(back.width == 20);
    REQUIRE(back.height == 16);
    for (std::size_t i = 0; i < f.gray.size(); ++i) {
        CHECK(back.gray[i] == doctest::Approx(f.gray[i]).epsilon(1e-6));
    }
}
