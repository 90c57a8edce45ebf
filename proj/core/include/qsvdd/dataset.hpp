#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsvdd/statevector.hpp"

namespace qsvdd {

constexpr int kImageSide = 28;
constexpr int kResizedSide = 16;

struct ImageRecord {
    std::array<std::uint8_t, kImageSide * kImageSide> pixels{};
    int label = 0;
};

struct EncodedSample {
    std::vector<double> vector;  // row-major 16x16, unit norm
    Statevector state;           // 8 qubits, amplitudes = vector entries
    int label = 0;
};

/// One-class split: train on normals only, test on held-out normals plus a
/// balanced draw from every other class.
struct TaskSplit {
    int normal_class = 0;
    std::vector<EncodedSample> train;
    std::vector<EncodedSample> test_normal;
    std::vector<EncodedSample> test_abnormal;
    std::uint64_t seed = 0;
};

/// Reads an IDX image/label file pair, gzip-compressed or raw. Errors on a
/// wrong magic number (names the expected one), truncation, image dimensions
/// other than 28x28, label/image count mismatch, or labels outside 0..9.
std::vector<ImageRecord> load_idx(const std::string& images_path,
                                  const std::string& labels_path);

/// Bilinear downscale/upscale with the half-pixel-center convention: output
/// pixel (i,j) samples source coordinate ((i+0.5)*src/dst - 0.5, ...),
/// clamped to the valid range.
std::vector<double> bilinear_resize(std::span<const double> src, int src_h, int src_w,
                                    int dst_h, int dst_w);

/// Normalizes a 2^n-entry vector onto the amplitudes of an n-qubit state
/// (basis order, qubit 0 most significant). Errors on non-power-of-two length
/// and on norm <= 1e-12 (the caller should drop such a sample).
Statevector amplitude_encode(std::span<const double> vec);

/// 28x28 record -> pixels/255 -> bilinear 16x16 -> amplitude encoding.
EncodedSample encode_record(const ImageRecord& record);

/// Draws the one-class task from the two dataset partitions. Train takes
/// round(scale * count) of the normal class from train_records; the test side
/// takes round(1000*scale) normals and round(100*scale) from each other class
/// out of test_records. Deterministic given (seed, scale). Zero-norm images
/// are skipped with a warning; if a class has fewer usable records than
/// requested the draw clamps to what exists (also warned). Errors when a
/// required bucket is empty.
TaskSplit build_task_split(const std::vector<ImageRecord>& train_records,
                           const std::vector<ImageRecord>& test_records, int normal_class,
                           std::uint64_t seed, double scale);

}  // namespace qsvdd
