#include "qsvdd/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "qsvdd/rng.hpp"

namespace qsvdd {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

class IdxReader {
  public:
    explicit IdxReader(const std::string& path) : path_(path) {
        file_ = gzopen(path.c_str(), "rb");  // reads raw files transparently too
        if (!file_) {
            throw std::runtime_error("load_idx: cannot open " + path);
        }
    }
    ~IdxReader() {
        if (file_) gzclose(file_);
    }
    IdxReader(const IdxReader&) = delete;
    IdxReader& operator=(const IdxReader&) = delete;

    void read(void* dst, std::size_t bytes) {
        const int got = gzread(file_, dst, static_cast<unsigned>(bytes));
        if (got < 0 || static_cast<std::size_t>(got) != bytes) {
            throw std::runtime_error("load_idx: truncated file " + path_);
        }
    }

    std::uint32_t read_u32() {
        std::uint8_t raw[4];
        read(raw, 4);
        return (std::uint32_t{raw[0]} << 24) | (std::uint32_t{raw[1]} << 16) |
               (std::uint32_t{raw[2]} << 8) | std::uint32_t{raw[3]};
    }

    bool at_eof() {
        std::uint8_t probe;
        return gzread(file_, &probe, 1) == 0;
    }

  private:
    std::string path_;
    gzFile file_ = nullptr;
};

}  // namespace

std::vector<ImageRecord> load_idx(const std::string& images_path,
                                  const std::string& labels_path) {
    IdxReader images(images_path);
    const std::uint32_t images_magic = images.read_u32();
    if (images_magic != kImagesMagic) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "load_idx: %s has magic 0x%08x, expected image magic 0x%08x",
                      images_path.c_str(), images_magic, kImagesMagic);
        throw std::runtime_error(msg);
    }
    const std::uint32_t n_images = images.read_u32();
    const std::uint32_t rows = images.read_u32();
    const std::uint32_t cols = images.read_u32();
    if (rows != kImageSide || cols != kImageSide) {
        throw std::runtime_error("load_idx: unsupported image size " + std::to_string(rows) +
                                 "x" + std::to_string(cols) + ", expected 28x28");
    }

    IdxReader labels(labels_path);
    const std::uint32_t labels_magic = labels.read_u32();
    if (labels_magic != kLabelsMagic) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "load_idx: %s has magic 0x%08x, expected label magic 0x%08x",
                      labels_path.c_str(), labels_magic, kLabelsMagic);
        throw std::runtime_error(msg);
    }
    const std::uint32_t n_labels = labels.read_u32();
    if (n_images != n_labels) {
        throw std::runtime_error("load_idx: " + std::to_string(n_images) + " images but " +
                                 std::to_string(n_labels) + " labels");
    }

    std::vector<ImageRecord> records(n_images);
    for (ImageRecord& record : records) {
        images.read(record.pixels.data(), record.pixels.size());
        std::uint8_t label;
        labels.read(&label, 1);
        if (label > 9) {
            throw std::runtime_error("load_idx: label " + std::to_string(label) +
                                     " outside 0..9 in " + labels_path);
        }
        record.label = label;
    }
    if (!images.at_eof() || !labels.at_eof()) {
        throw std::runtime_error("load_idx: trailing bytes after " + std::to_string(n_images) +
                                 " records");
    }
    return records;
}

std::vector<double> bilinear_resize(std::span<const double> src, int src_h, int src_w,
                                    int dst_h, int dst_w) {
    if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1 ||
        src.size() != static_cast<std::size_t>(src_h) * static_cast<std::size_t>(src_w)) {
        throw std::invalid_argument("bilinear_resize: shape mismatch");
    }
    std::vector<double> dst(static_cast<std::size_t>(dst_h) * static_cast<std::size_t>(dst_w));
    const auto axis_sample = [](int out_idx, int src_len, int dst_len, int& lo, int& hi,
                                double& frac) {
        double pos = (out_idx + 0.5) * static_cast<double>(src_len) / dst_len - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(src_len - 1));
        lo = static_cast<int>(std::floor(pos));
        hi = std::min(lo + 1, src_len - 1);
        frac = pos - lo;
    };
    for (int i = 0; i < dst_h; ++i) {
        int r0, r1;
        double fr;
        axis_sample(i, src_h, dst_h, r0, r1, fr);
        for (int j = 0; j < dst_w; ++j) {
            int c0, c1;
            double fc;
            axis_sample(j, src_w, dst_w, c0, c1, fc);
            const auto at = [&](int r, int c) {
                return src[static_cast<std::size_t>(r) * src_w + c];
            };
            const double top = at(r0, c0) * (1 - fc) + at(r0, c1) * fc;
            const double bottom = at(r1, c0) * (1 - fc) + at(r1, c1) * fc;
            dst[static_cast<std::size_t>(i) * dst_w + j] = top * (1 - fr) + bottom * fr;
        }
    }
    return dst;
}

Statevector amplitude_encode(std::span<const double> vec) {
    if (vec.empty() || !std::has_single_bit(vec.size())) {
        throw std::invalid_argument("amplitude_encode: length must be a power of two, got " +
                                    std::to_string(vec.size()));
    }
    const int n_qubits = std::countr_zero(vec.size());
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("amplitude_encode: unsupported qubit count " +
                                    std::to_string(n_qubits));
    }
    double norm_sq = 0.0;
    for (double v : vec) {
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= 1e-12) {
        throw std::runtime_error(
            "amplitude_encode: vector norm is (near) zero; drop this sample");
    }
    Statevector state;
    state.n_qubits = n_qubits;
    state.amps.resize(vec.size());
    for (std::size_t i = 0; i < vec.size(); ++i) {
        state.amps[i] = cdouble{vec[i] / norm, 0.0};
    }
    return state;
}

EncodedSample encode_record(const ImageRecord& record) {
    std::vector<double> gray(record.pixels.size());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray[i] = record.pixels[i] / 255.0;
    }
    std::vector<double> resized =
        bilinear_resize(gray, kImageSide, kImageSide, kResizedSide, kResizedSide);
    EncodedSample sample;
    sample.state = amplitude_encode(resized);
    sample.vector.resize(resized.size());
    for (std::size_t i = 0; i < resized.size(); ++i) {
        sample.vector[i] = sample.state.amps[i].real();
    }
    sample.label = record.label;
    return sample;
}

namespace {

// Draws up to `want` encodable records from the shuffled candidate indices,
// skipping all-black images.
std::vector<EncodedSample> draw_encoded(const std::vector<ImageRecord>& records,
                                        std::vector<std::size_t>& candidates, Rng& rng,
                                        std::size_t want, const char* bucket) {
    rng.shuffle(candidates);
    std::vector<EncodedSample> out;
    out.reserve(want);
    for (std::size_t idx : candidates) {
        if (out.size() == want) break;
        try {
            out.push_back(encode_record(records[idx]));
        } catch (const std::runtime_error&) {
            std::cerr << "warning: skipping zero-norm image at index " << idx << " (" << bucket
                      << ")\n";
        }
    }
    if (out.size() < want) {
        std::cerr << "warning: " << bucket << " has only " << out.size() << " usable records, "
                  << want << " requested\n";
    }
    return out;
}

}  // namespace

TaskSplit build_task_split(const std::vector<ImageRecord>& train_records,
                           const std::vector<ImageRecord>& test_records, int normal_class,
                           std::uint64_t seed, double scale) {
    if (normal_class < 0 || normal_class > 9) {
        throw std::invalid_argument("build_task_split: normal_class must be 0..9");
    }
    if (!(scale > 0.0) || scale > 1.0) {
        throw std::invalid_argument("build_task_split: scale must be in (0, 1]");
    }
    if (train_records.empty() || test_records.empty()) {
        throw std::invalid_argument("build_task_split: empty record set");
    }

    const auto indices_of = [](const std::vector<ImageRecord>& records, int label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].label == label) idx.push_back(i);
        }
        return idx;
    };
    const auto scaled = [&](double count) {
        return static_cast<std::size_t>(std::llround(count * scale));
    };

    TaskSplit split;
    split.normal_class = normal_class;
    split.seed = seed;
    Rng rng(seed);

    std::vector<std::size_t> train_normal = indices_of(train_records, normal_class);
    if (train_normal.empty()) {
        throw std::runtime_error("build_task_split: no training records of class " +
                                 std::to_string(normal_class));
    }
    const std::size_t train_want = std::max<std::size_t>(
        1, scaled(static_cast<double>(train_normal.size())));
    split.train = draw_encoded(train_records, train_normal, rng, train_want, "train normals");

    std::vector<std::size_t> test_normal = indices_of(test_records, normal_class);
    if (test_normal.empty()) {
        throw std::runtime_error("build_task_split: no test records of class " +
                                 std::to_string(normal_class));
    }
    split.test_normal =
        draw_encoded(test_records, test_normal, rng, scaled(1000.0), "test normals");

    for (int label = 0; label <= 9; ++label) {
        if (label == normal_class) continue;
        std::vector<std::size_t> candidates = indices_of(test_records, label);
        if (candidates.empty()) {
            throw std::runtime_error("build_task_split: no test records of class " +
                                     std::to_string(label));
        }
        std::vector<EncodedSample> drawn =
            draw_encoded(test_records, candidates, rng, scaled(100.0), "test abnormals");
        for (EncodedSample& sample : drawn) {
            split.test_abnormal.push_back(std::move(sample));
        }
    }
    return split;
}

}  // namespace qsvdd
