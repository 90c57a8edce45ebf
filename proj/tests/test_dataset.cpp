#include <unistd.h>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "qsvdd/dataset.hpp"
#include "qsvdd/rng.hpp"
#include "support/synthetic_data.hpp"

using qsvdd::ImageRecord;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("qsvdd_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }

    static int& counter() {
        static int n = 0;
        return n;
    }
};

}  // namespace

TEST_CASE("idx round-trip through raw and gzip files") {
    const auto records = testutil::make_synthetic_records(3, 7);
    TempDir dir;
    for (bool gz : {false, true}) {
        const auto img = dir.file(gz ? "img.gz" : "img");
        const auto lab = dir.file(gz ? "lab.gz" : "lab");
        testutil::write_idx_pair(img, lab, records, gz);
        const auto back = qsvdd::load_idx(img, lab);
        REQUIRE(back.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(back[i].pixels == records[i].pixels);
            CHECK(back[i].label == records[i].label);
        }
    }
}

TEST_CASE("idx loader rejects malformed files") {
    const auto records = testutil::make_synthetic_records(2, 8);
    TempDir dir;
    const auto img = dir.file("img");
    const auto lab = dir.file("lab");
    testutil::write_idx_pair(img, lab, records, false);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(qsvdd::load_idx(dir.file("absent"), lab), std::runtime_error);
    }
    SUBCASE("wrong image magic names the expected value") {
        auto bytes = std::vector<char>{};
        {
            std::ifstream in(img, std::ios::binary);
            bytes.assign(std::istreambuf_iterator<char>(in), {});
        }
        bytes[3] = 0x04;  // 0x00000804
        const auto bad = dir.file("bad_img");
        std::ofstream(bad, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size()));
        try {
            qsvdd::load_idx(bad, lab);
            FAIL("expected a throw");
        } catch (const std::runtime_error& err) {
            CHECK(std::string(err.what()).find("803") != std::string::npos);
        }
    }
    SUBCASE("labels used as images fail on magic") {
        CHECK_THROWS_AS(qsvdd::load_idx(lab, img), std::runtime_error);
    }
    SUBCASE("count mismatch between the two files") {
        const auto img2 = dir.file("img2");
        const auto lab2 = dir.file("lab2");
        auto fewer = records;
        fewer.pop_back();
        testutil::write_idx_pair(img2, dir.file("scratch"), fewer, false);
        testutil::write_idx_pair(dir.file("scratch2"), lab2, records, false);
        CHECK_THROWS_AS(qsvdd::load_idx(img2, lab2), std::runtime_error);
    }
    SUBCASE("truncated image payload") {
        auto bytes = std::vector<char>{};
        {
            std::ifstream in(img, std::ios::binary);
            bytes.assign(std::istreambuf_iterator<char>(in), {});
        }
        bytes.resize(bytes.size() - 100);
        const auto cut = dir.file("cut_img");
        std::ofstream(cut, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size()));
        CHECK_THROWS_AS(qsvdd::load_idx(cut, lab), std::runtime_error);
    }
    SUBCASE("label outside 0..9") {
        auto tampered = records;
        tampered[0].label = 11;
        const auto img3 = dir.file("img3");
        const auto lab3 = dir.file("lab3");
        testutil::write_idx_pair(img3, lab3, tampered, false);
        CHECK_THROWS_AS(qsvdd::load_idx(img3, lab3), std::runtime_error);
    }
}

TEST_CASE("bilinear resize keeps constant images constant") {
    const std::vector<double> src(28 * 28, 0.625);
    const auto out = qsvdd::bilinear_resize(src, 28, 28, 16, 16);
    REQUIRE(out.size() == 16 * 16);
    for (double v : out) CHECK(v == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("bilinear resize at identical size is the identity") {
    qsvdd::Rng rng(41);
    std::vector<double> src(8 * 8);
    for (auto& v : src) v = rng.uniform(0.0, 1.0);
    const auto out = qsvdd::bilinear_resize(src, 8, 8, 8, 8);
    for (std::size_t i = 0; i < src.size(); ++i) CHECK(out[i] == doctest::Approx(src[i]));
}

TEST_CASE("4x4 to 2x2 resize averages each 2x2 block") {
    // With half-pixel centers and a factor-2 downscale, output (i,j) samples
    // source (2i+0.5, 2j+0.5): the exact mean of the corresponding block.
    const std::vector<double> src{1, 2, 3, 4,  //
                                  5, 6, 7, 8,  //
                                  9, 10, 11, 12,  //
                                  13, 14, 15, 16};
    const auto out = qsvdd::bilinear_resize(src, 4, 4, 2, 2);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == doctest::Approx((1 + 2 + 5 + 6) / 4.0));
    CHECK(out[1] == doctest::Approx((3 + 4 + 7 + 8) / 4.0));
    CHECK(out[2] == doctest::Approx((9 + 10 + 13 + 14) / 4.0));
    CHECK(out[3] == doctest::Approx((11 + 12 + 15 + 16) / 4.0));
}

TEST_CASE("2x2 to 4x4 upscale interpolates along straight lines") {
    // A linear ramp stays linear under bilinear interpolation; corners clamp.
    const std::vector<double> src{0, 1, 0, 1};  // columns 0 and 1
    const auto out = qsvdd::bilinear_resize(src, 2, 2, 1, 4);
    REQUIRE(out.size() == 4);
    // Output column centers map to source x = -0.25, 0.25, 0.75, 1.25;
    // clamped to [0, 1] at both extremes.
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(0.25));
    CHECK(out[2] == doctest::Approx(0.75));
    CHECK(out[3] == doctest::Approx(1.0));
}

TEST_CASE("resize output stays inside the source intensity range") {
    qsvdd::Rng rng(42);
    std::vector<double> src(28 * 28);
    for (auto& v : src) v = rng.uniform(0.0, 1.0);
    const auto lo = *std::min_element(src.begin(), src.end());
    const auto hi = *std::max_element(src.begin(), src.end());
    for (const auto& out : {qsvdd::bilinear_resize(src, 28, 28, 16, 16),
                            qsvdd::bilinear_resize(src, 28, 28, 31, 9)}) {
        for (double v : out) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("amplitude encoding normalizes and preserves structure") {
    const std::vector<double> vec{3.0, 0.0, 4.0, 0.0};
    const auto state = qsvdd::amplitude_encode(vec);
    CHECK(state.n_qubits == 2);
    CHECK(state.amps[0].real() == doctest::Approx(0.6));
    CHECK(state.amps[2].real() == doctest::Approx(0.8));
    CHECK(state.norm_sq() == doctest::Approx(1.0));

    // Basis vector input stays a basis state.
    const std::vector<double> e5{0, 0, 0, 0, 0, 1, 0, 0};
    const auto basis = qsvdd::amplitude_encode(e5);
    CHECK(basis.amps[5].real() == doctest::Approx(1.0));

    CHECK_THROWS_AS(qsvdd::amplitude_encode(std::vector<double>{1, 2, 3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(qsvdd::amplitude_encode(std::vector<double>(4, 0.0)), std::runtime_error);
}

TEST_CASE("encode_record produces a unit-norm 8-qubit state") {
    const auto records = testutil::make_synthetic_records(1, 9);
    const auto sample = qsvdd::encode_record(records[0]);
    CHECK(sample.state.n_qubits == 8);
    CHECK(sample.vector.size() == 256);
    CHECK(sample.state.norm_sq() == doctest::Approx(1.0));
    CHECK(sample.label == records[0].label);
    for (std::size_t i = 0; i < sample.vector.size(); ++i) {
        CHECK(sample.state.amps[i].imag() == 0.0);
        CHECK(sample.state.amps[i].real() == doctest::Approx(sample.vector[i]));
    }

    // The brightest resized pixel carries the largest amplitude.
    const auto argmax_vec =
        std::max_element(sample.vector.begin(), sample.vector.end()) - sample.vector.begin();
    const auto argmax_amp =
        std::max_element(sample.state.amps.begin(), sample.state.amps.end(),
                         [](auto a, auto b) { return a.real() < b.real(); }) -
        sample.state.amps.begin();
    CHECK(argmax_vec == argmax_amp);
}

TEST_CASE("task splits have the contracted sizes and provenance") {
    const auto train_records = testutil::make_synthetic_records(80, 51);
    const auto test_records = testutil::make_synthetic_records(110, 52);
    const auto split = qsvdd::build_task_split(train_records, test_records, 3, 99, 0.1);

    CHECK(split.normal_class == 3);
    CHECK(split.seed == 99);
    CHECK(split.train.size() == 8);           // round(80 * 0.1)
    CHECK(split.test_normal.size() == 100);   // round(1000 * 0.1)
    CHECK(split.test_abnormal.size() == 90);  // 9 classes x round(100 * 0.1)

    for (const auto& s : split.train) CHECK(s.label == 3);
    for (const auto& s : split.test_normal) CHECK(s.label == 3);
    std::set<int> abnormal_labels;
    for (const auto& s : split.test_abnormal) {
        CHECK(s.label != 3);
        abnormal_labels.insert(s.label);
    }
    CHECK(abnormal_labels.size() == 9);
}

TEST_CASE("task split draws the full-scale test sizes when data suffices") {
    const auto train_records = testutil::make_synthetic_records(30, 53);
    const auto test_records = testutil::make_synthetic_records(1000, 54);
    const auto split = qsvdd::build_task_split(train_records, test_records, 0, 1, 1.0);
    CHECK(split.train.size() == 30);
    CHECK(split.test_normal.size() == 1000);
    CHECK(split.test_abnormal.size() == 900);
}

TEST_CASE("task splits are deterministic in the seed") {
    const auto train_records = testutil::make_synthetic_records(50, 55);
    const auto test_records = testutil::make_synthetic_records(60, 56);
    const auto a = qsvdd::build_task_split(train_records, test_records, 2, 7, 0.1);
    const auto b = qsvdd::build_task_split(train_records, test_records, 2, 7, 0.1);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i)
        CHECK(a.train[i].vector == b.train[i].vector);
    REQUIRE(a.test_abnormal.size() == b.test_abnormal.size());
    for (std::size_t i = 0; i < a.test_abnormal.size(); ++i)
        CHECK(a.test_abnormal[i].label == b.test_abnormal[i].label);

    const auto c = qsvdd::build_task_split(train_records, test_records, 2, 8, 0.1);
    bool any_difference = a.train.size() != c.train.size();
    for (std::size_t i = 0; !any_difference && i < a.train.size(); ++i)
        any_difference = a.train[i].vector != c.train[i].vector;
    CHECK(any_difference);
}

TEST_CASE("small scales keep at least one training sample") {
    const auto train_records = testutil::make_synthetic_records(4, 57);
    const auto test_records = testutil::make_synthetic_records(40, 58);
    const auto split = qsvdd::build_task_split(train_records, test_records, 1, 3, 0.01);
    CHECK(split.train.size() == 1);
}

TEST_CASE("task split validation") {
    const auto records = testutil::make_synthetic_records(5, 59);
    CHECK_THROWS_AS(qsvdd::build_task_split(records, records, 10, 1, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(qsvdd::build_task_split(records, records, -1, 1, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(qsvdd::build_task_split(records, records, 0, 1, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(qsvdd::build_task_split(records, records, 0, 1, 1.5),
                    std::invalid_argument);
    const std::vector<ImageRecord> empty;
    CHECK_THROWS_AS(qsvdd::build_task_split(empty, records, 0, 1, 0.1), std::invalid_argument);
}
