#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsvdd/detection.hpp"

namespace qsvdd {

/// Everything a run needs, straight from the INI-style config file. Sections:
/// [data], [model], [train], [run]. Unknown sections or keys are errors.
struct ExperimentConfig {
    // [data]
    std::string dataset = "mnist";
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;

    // [model]
    std::vector<std::string> methods = {"qsvdd"};
    std::vector<int> d_primes = {9};
    int convs_per_block = 2;
    bool share_params = true;
    bool final_conv = true;
    int qae_trash = 6;
    int qae_layers = 9;

    // [train]
    int epochs = 30;
    int batch_size = 32;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::string grad = "adjoint";  // adjoint | shift

    // [run]
    std::vector<int> classes = {0};
    std::vector<std::uint64_t> seeds = {0};
    double scale = 1.0;
    std::string output_dir = "out";
    int jobs = 1;
    std::string timing = "wall";  // wall | none (none zeroes wall_seconds for
                                  // byte-stable result files)

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Canonical text form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Field-level sanity checks (ranges, enum strings). Throws with the
/// offending field's name. Does not touch the filesystem.
void validate_config(const ExperimentConfig& config);

/// Prefixes relative data paths with the QSVDD_DATA_DIR environment variable
/// when it is set (absolute paths and empty values are left alone).
void resolve_data_dir(ExperimentConfig& config);

/// Errors unless all four dataset paths are set and exist.
void require_data_files(const ExperimentConfig& config);

BenchmarkPlan plan_from_config(const ExperimentConfig& config);

}  // namespace qsvdd
