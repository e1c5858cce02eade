#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "featkd/losses.hpp"
#include "featkd/lsh.hpp"
#include "featkd/model.hpp"
#include "featkd/trainer.hpp"

namespace featkd {

using Json = nlohmann::json;

inline Json to_json(const Matrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const Json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.rows() * m.cols()) {
        throw std::runtime_error("matrix_from_json: data length mismatch");
    }
    m.data() = data;
    return m;
}

inline Json to_json(const LinearLayer& l) {
    return Json{{"weights", to_json(l.weights)}, {"bias", l.bias}};
}

inline LinearLayer linear_from_json(const Json& j) {
    LinearLayer l;
    l.weights = matrix_from_json(j.at("weights"));
    l.bias = j.at("bias").get<Vector>();
    if (l.bias.size() != l.weights.cols()) {
        throw std::runtime_error("linear_from_json: bias length mismatch");
    }
    return l;
}

inline const char* bias_init_name(BiasInit b) {
    switch (b) {
        case BiasInit::Zero: return "zero";
        case BiasInit::Mean: return "mean";
        case BiasInit::Median: return "median";
    }
    return "?";
}

inline BiasInit parse_bias_init(const std::string& s) {
    if (s == "zero") return BiasInit::Zero;
    if (s == "mean") return BiasInit::Mean;
    if (s == "median") return BiasInit::Median;
    throw std::invalid_argument("unknown bias init: " + s);
}

inline Json to_json(const HashModule& m) {
    return Json{{"format", "featkd-hash-v1"},
                {"feature_dim", m.feature_dim()},
                {"n_hash", m.n_hash},
                {"std_hash", m.std_hash},
                {"seed", m.seed},
                {"weights", to_json(m.weights)},
                {"bias", m.bias}};
}

inline HashModule hash_module_from_json(const Json& j) {
    if (j.at("format").get<std::string>() != "featkd-hash-v1") {
        throw std::runtime_error("hash_module_from_json: unknown format");
    }
    HashModule m;
    m.weights = matrix_from_json(j.at("weights"));
    m.bias = j.at("bias").get<Vector>();
    m.n_hash = j.at("n_hash").get<std::size_t>();
    m.std_hash = j.at("std_hash").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.weights.cols() != m.n_hash || m.bias.size() != m.n_hash) {
        throw std::runtime_error("hash_module_from_json: dimension mismatch");
    }
    return m;
}

/// Checkpoint format: layer dims and parameters plus init metadata. Given the
/// same seed and config the bytes are reproducible.
inline Json to_json(const Mlp& model, std::uint64_t seed) {
    Json hidden = Json::array();
    for (const LinearLayer& l : model.hidden) {
        hidden.push_back(to_json(l));
    }
    Json j{{"format", "featkd-mlp-v1"},
           {"hidden", hidden},
           {"classifier", to_json(model.classifier)},
           {"init", {{"seed", seed}, {"rule", "fan-in-gaussian"}}}};
    j["embedding"] = model.embedding ? to_json(*model.embedding) : Json(nullptr);
    return j;
}

inline Mlp mlp_from_json(const Json& j) {
    if (j.at("format").get<std::string>() != "featkd-mlp-v1") {
        throw std::runtime_error("mlp_from_json: unknown format");
    }
    Mlp model;
    for (const Json& l : j.at("hidden")) {
        model.hidden.push_back(linear_from_json(l));
    }
    if (!j.at("embedding").is_null()) {
        model.embedding = linear_from_json(j.at("embedding"));
    }
    model.classifier = linear_from_json(j.at("classifier"));
    return model;
}

inline Json to_json(const AngleStats& s) {
    return Json{{"mean_teacher_norm", s.mean_teacher_norm},
                {"mean_student_norm", s.mean_student_norm},
                {"mean_angle_deg", s.mean_angle_deg},
                {"accuracy", s.accuracy},
                {"split", s.split},
                {"skipped", s.skipped}};
}

/// Logging row per the combined objective, keyed by step.
inline Json to_json(const LossReport& r, std::size_t step) {
    return Json{{"step", step}, {"ce", r.ce},     {"mse", r.mse},
                {"lsh", r.lsh}, {"beta", r.beta}, {"total", r.total}};
}

/// Writes text to `path` atomically: a dot-tmp sibling is renamed over the
/// target only after the full payload is flushed.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& payload) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw std::runtime_error("write_file_atomic: cannot open " + tmp.string());
        }
        out << payload;
        out.flush();
        if (!out) {
            throw std::runtime_error("write_file_atomic: write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_json_file: cannot open " + path.string());
    }
    Json j;
    in >> j;
    return j;
}

}  // namespace featkd
