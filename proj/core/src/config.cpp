#include "qsvdd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qsvdd {

namespace {

std::string trim(const std::string& s) {
    const std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& where, const std::string& text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::runtime_error("config: " + where + " expects an integer, got '" + text + "'");
    }
    return value;
}

std::uint64_t parse_u64(const std::string& where, const std::string& text) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::runtime_error("config: " + where + " expects an unsigned integer, got '" +
                                 text + "'");
    }
    return value;
}

double parse_double(const std::string& where, const std::string& text) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || text.empty()) {
        throw std::runtime_error("config: " + where + " expects a number, got '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& where, const std::string& text) {
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    throw std::runtime_error("config: " + where + " expects true/false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_same_v<T, std::string>) {
            out += xs[i];
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

std::string fmt_real(double v) {
    // Shortest representation that parses back to the same double.
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"data",
         {{"dataset", [&](const std::string&, const std::string& v) { cfg.dataset = v; }},
          {"train_images",
           [&](const std::string&, const std::string& v) { cfg.train_images = v; }},
          {"train_labels",
           [&](const std::string&, const std::string& v) { cfg.train_labels = v; }},
          {"test_images",
           [&](const std::string&, const std::string& v) { cfg.test_images = v; }},
          {"test_labels",
           [&](const std::string&, const std::string& v) { cfg.test_labels = v; }}}},
        {"model",
         {{"method",
           [&](const std::string&, const std::string& v) { cfg.methods = split_list(v); }},
          {"d_prime",
           [&](const std::string& w, const std::string& v) {
               cfg.d_primes.clear();
               for (const std::string& part : split_list(v)) {
                   cfg.d_primes.push_back(parse_int(w, part));
               }
           }},
          {"convs_per_block",
           [&](const std::string& w, const std::string& v) {
               cfg.convs_per_block = parse_int(w, v);
           }},
          {"share_params",
           [&](const std::string& w, const std::string& v) {
               cfg.share_params = parse_bool(w, v);
           }},
          {"final_conv",
           [&](const std::string& w, const std::string& v) { cfg.final_conv = parse_bool(w, v); }},
          {"qae_trash",
           [&](const std::string& w, const std::string& v) { cfg.qae_trash = parse_int(w, v); }},
          {"qae_layers",
           [&](const std::string& w, const std::string& v) {
               cfg.qae_layers = parse_int(w, v);
           }}}},
        {"train",
         {{"epochs",
           [&](const std::string& w, const std::string& v) { cfg.epochs = parse_int(w, v); }},
          {"batch_size",
           [&](const std::string& w, const std::string& v) { cfg.batch_size = parse_int(w, v); }},
          {"lr", [&](const std::string& w, const std::string& v) { cfg.lr = parse_double(w, v); }},
          {"beta1",
           [&](const std::string& w, const std::string& v) { cfg.beta1 = parse_double(w, v); }},
          {"beta2",
           [&](const std::string& w, const std::string& v) { cfg.beta2 = parse_double(w, v); }},
          {"epsilon",
           [&](const std::string& w, const std::string& v) { cfg.epsilon = parse_double(w, v); }},
          {"grad", [&](const std::string&, const std::string& v) { cfg.grad = v; }}}},
        {"run",
         {{"classes",
           [&](const std::string& w, const std::string& v) {
               cfg.classes.clear();
               for (const std::string& part : split_list(v)) {
                   cfg.classes.push_back(parse_int(w, part));
               }
           }},
          {"seeds",
           [&](const std::string& w, const std::string& v) {
               cfg.seeds.clear();
               for (const std::string& part : split_list(v)) {
                   cfg.seeds.push_back(parse_u64(w, part));
               }
           }},
          {"scale",
           [&](const std::string& w, const std::string& v) { cfg.scale = parse_double(w, v); }},
          {"output_dir",
           [&](const std::string&, const std::string& v) { cfg.output_dir = v; }},
          {"jobs",
           [&](const std::string& w, const std::string& v) { cfg.jobs = parse_int(w, v); }},
          {"timing", [&](const std::string&, const std::string& v) { cfg.timing = v; }}}}};

    std::string section;
    std::vector<std::string> seen;
    std::istringstream in(text);
    std::string raw_line;
    int line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        const std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::runtime_error("config: malformed section header at line " +
                                         std::to_string(line_no));
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!schema.contains(section)) {
                throw std::runtime_error("config: unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: expected key = value at line " +
                                     std::to_string(line_no));
        }
        if (section.empty()) {
            throw std::runtime_error("config: key outside any section at line " +
                                     std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& keys = schema.at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) {
            throw std::runtime_error("config: unknown key '" + key + "' in [" + section + "]");
        }
        const std::string qualified = "[" + section + "] " + key;
        if (std::find(seen.begin(), seen.end(), qualified) != seen.end()) {
            throw std::runtime_error("config: duplicate key '" + key + "' in [" + section + "]");
        }
        seen.push_back(qualified);
        it->second(qualified, value);
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    std::ostringstream body;
    body << in.rdbuf();
    return parse_config_text(body.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "[data]\n";
    out << "dataset = " << c.dataset << "\n";
    out << "train_images = " << c.train_images << "\n";
    out << "train_labels = " << c.train_labels << "\n";
    out << "test_images = " << c.test_images << "\n";
    out << "test_labels = " << c.test_labels << "\n";
    out << "\n[model]\n";
    out << "method = " << join_list(c.methods) << "\n";
    out << "d_prime = " << join_list(c.d_primes) << "\n";
    out << "convs_per_block = " << c.convs_per_block << "\n";
    out << "share_params = " << (c.share_params ? "true" : "false") << "\n";
    out << "final_conv = " << (c.final_conv ? "true" : "false") << "\n";
    out << "qae_trash = " << c.qae_trash << "\n";
    out << "qae_layers = " << c.qae_layers << "\n";
    out << "\n[train]\n";
    out << "epochs = " << c.epochs << "\n";
    out << "batch_size = " << c.batch_size << "\n";
    out << "lr = " << fmt_real(c.lr) << "\n";
    out << "beta1 = " << fmt_real(c.beta1) << "\n";
    out << "beta2 = " << fmt_real(c.beta2) << "\n";
    out << "epsilon = " << fmt_real(c.epsilon) << "\n";
    out << "grad = " << c.grad << "\n";
    out << "\n[run]\n";
    out << "classes = " << join_list(c.classes) << "\n";
    out << "seeds = " << join_list(c.seeds) << "\n";
    out << "scale = " << fmt_real(c.scale) << "\n";
    out << "output_dir = " << c.output_dir << "\n";
    out << "jobs = " << c.jobs << "\n";
    out << "timing = " << c.timing << "\n";
    return out.str();
}

void validate_config(const ExperimentConfig& c) {
    const auto fail = [](const std::string& field, const std::string& why) {
        throw std::runtime_error("config: " + field + " " + why);
    };
    if (c.dataset.empty()) fail("dataset", "must be nonempty");
    if (c.methods.empty()) fail("method", "must list at least one method");
    for (const std::string& m : c.methods) {
        if (m != "qsvdd" && m != "qae-occ") fail("method", "must be qsvdd or qae-occ, got " + m);
    }
    if (c.d_primes.empty()) fail("d_prime", "must list at least one value");
    for (int d : c.d_primes) {
        if (d < 1 || d > 15) fail("d_prime", "must be 1..15, got " + std::to_string(d));
    }
    if (c.convs_per_block < 1) fail("convs_per_block", "must be >= 1");
    // The amplitude encoder fixes the register at 8 qubits, so at least one
    // qubit must stay latent.
    if (c.qae_trash < 1 || c.qae_trash > 7) fail("qae_trash", "must be 1..7");
    if (c.qae_layers < 1) fail("qae_layers", "must be >= 1");
    if (c.epochs < 1) fail("epochs", "must be >= 1");
    if (c.batch_size < 1) fail("batch_size", "must be >= 1");
    if (!(c.lr > 0.0)) fail("lr", "must be > 0");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) fail("beta1", "must be in [0, 1)");
    if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) fail("beta2", "must be in [0, 1)");
    if (!(c.epsilon > 0.0)) fail("epsilon", "must be > 0");
    if (c.grad != "adjoint" && c.grad != "shift") fail("grad", "must be adjoint or shift");
    if (c.classes.empty()) fail("classes", "must list at least one class");
    for (int cls : c.classes) {
        if (cls < 0 || cls > 9) fail("classes", "entries must be 0..9");
    }
    if (c.seeds.empty()) fail("seeds", "must list at least one seed");
    if (!(c.scale > 0.0 && c.scale <= 1.0)) fail("scale", "must be in (0, 1]");
    if (c.output_dir.empty()) fail("output_dir", "must be nonempty");
    if (c.jobs < 1) fail("jobs", "must be >= 1");
    if (c.timing != "wall" && c.timing != "none") fail("timing", "must be wall or none");
}

void resolve_data_dir(ExperimentConfig& config) {
    const char* dir = std::getenv("QSVDD_DATA_DIR");
    if (!dir || !*dir) return;
    const auto resolve = [&](std::string& path) {
        if (path.empty()) return;
        if (std::filesystem::path(path).is_absolute()) return;
        path = (std::filesystem::path(dir) / path).string();
    };
    resolve(config.train_images);
    resolve(config.train_labels);
    resolve(config.test_images);
    resolve(config.test_labels);
}

void require_data_files(const ExperimentConfig& config) {
    const auto check = [](const std::string& field, const std::string& path) {
        if (path.empty()) {
            throw std::runtime_error("config: " + field + " is required");
        }
        if (!std::filesystem::exists(path)) {
            throw std::runtime_error("config: " + field + " does not exist: " + path);
        }
    };
    check("train_images", config.train_images);
    check("train_labels", config.train_labels);
    check("test_images", config.test_images);
    check("test_labels", config.test_labels);
}

BenchmarkPlan plan_from_config(const ExperimentConfig& c) {
    BenchmarkPlan plan;
    plan.dataset_id = c.dataset;
    plan.methods.clear();
    for (const std::string& m : c.methods) {
        plan.methods.push_back(method_from_name(m));
    }
    plan.classes = c.classes;
    plan.seeds = c.seeds;
    plan.d_primes = c.d_primes;
    plan.scale = c.scale;
    plan.train.epochs = c.epochs;
    plan.train.batch_size = c.batch_size;
    plan.train.lr = c.lr;
    plan.train.beta1 = c.beta1;
    plan.train.beta2 = c.beta2;
    plan.train.epsilon = c.epsilon;
    plan.train.grad_mode = c.grad == "shift" ? GradMode::ParameterShift : GradMode::Adjoint;
    plan.train.record_time = c.timing == "wall";
    plan.qcnn.convs_per_block = c.convs_per_block;
    plan.qcnn.share_params = c.share_params;
    plan.qcnn.final_conv = c.final_conv;
    plan.qae.n_t = c.qae_trash;
    plan.qae.l = c.qae_layers;
    plan.jobs = c.jobs;
    return plan;
}

}  // namespace qsvdd
