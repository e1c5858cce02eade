#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "featkd/matrix.hpp"
#include "featkd/rng.hpp"

namespace featkd {

struct Dataset {
    std::vector<Vector> inputs;
    std::vector<std::size_t> labels;
    std::string split;

    std::size_t size() const { return inputs.size(); }
};

/// Synthetic Gaussian-blob classification task: one random unit-Gaussian
/// center per class, points scattered around it with the given spread. Equal
/// sample counts per class in both splits; everything is derived from the
/// stream, so equal seeds give equal datasets.
inline std::pair<Dataset, Dataset> generate_blobs(std::size_t n_classes, std::size_t dim,
                                                  std::size_t samples_per_class, double spread,
                                                  RngStream& rng) {
    if (n_classes < 1 || dim < 1 || samples_per_class < 1 || !(spread > 0.0)) {
        throw std::invalid_argument("generate_blobs: invalid parameters");
    }
    std::vector<Vector> centers(n_classes);
    for (Vector& c : centers) {
        c = gaussian_vector(dim, 0.0, 1.0, rng);
    }
    auto make_split = [&](const char* tag) {
        Dataset d;
        d.split = tag;
        for (std::size_t cls = 0; cls < n_classes; ++cls) {
            for (std::size_t s = 0; s < samples_per_class; ++s) {
                Vector x = centers[cls];
                for (double& v : x) {
                    v += rng.next_gaussian(0.0, spread);
                }
                d.inputs.push_back(std::move(x));
                d.labels.push_back(cls);
            }
        }
        return d;
    };
    Dataset train = make_split("train");
    Dataset test = make_split("test");
    return {std::move(train), std::move(test)};
}

/// CSV loader, header `label,x0,x1,...`. Ragged or non-numeric rows are
/// rejected.
inline Dataset load_dataset_csv(const std::string& path, const std::string& split_tag = "train") {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_dataset_csv: cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("load_dataset_csv: empty file " + path);
    }
    std::size_t dim = 0;
    {
        std::stringstream header(line);
        std::string cell;
        if (!std::getline(header, cell, ',') || cell != "label") {
            throw std::runtime_error("load_dataset_csv: header must start with 'label'");
        }
        while (std::getline(header, cell, ',')) {
            ++dim;
        }
        if (dim == 0) {
            throw std::runtime_error("load_dataset_csv: no feature columns");
        }
    }
    Dataset d;
    d.split = split_tag;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != dim + 1) {
            throw std::runtime_error("load_dataset_csv: ragged row " + std::to_string(row));
        }
        try {
            std::size_t parsed = 0;
            const long long label = std::stoll(cells[0], &parsed);
            if (parsed != cells[0].size() || label < 0) {
                throw std::invalid_argument("label");
            }
            Vector x(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                x[i] = std::stod(cells[i + 1], &parsed);
                if (parsed != cells[i + 1].size()) {
                    throw std::invalid_argument("value");
                }
            }
            d.inputs.push_back(std::move(x));
            d.labels.push_back(static_cast<std::size_t>(label));
        } catch (const std::exception&) {
            throw std::runtime_error("load_dataset_csv: bad value in row " + std::to_string(row));
        }
    }
    return d;
}

inline void save_dataset_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_dataset_csv: cannot open " + path);
    }
    const std::size_t dim = d.inputs.empty() ? 0 : d.inputs.front().size();
    out << "label";
    for (std::size_t i = 0; i < dim; ++i) {
        out << ",x" << i;
    }
    out << "\n";
    out.precision(17);
    for (std::size_t r = 0; r < d.size(); ++r) {
        out << d.labels[r];
        for (double v : d.inputs[r]) {
            out << ',' << v;
        }
        out << "\n";
    }
}

}  // namespace featkd
