#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace xlstance {

// Batch of latent vectors with aligned labels and domain tags.
struct LatentBatch {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> data;            // rows x dim, row-major
    std::vector<std::size_t> labels;     // class index per row
    std::vector<std::string> domains;    // domain tag per row

    double* row(std::size_t i) { return data.data() + i * dim; }
    const double* row(std::size_t i) const { return data.data() + i * dim; }

    void validate() const {
        if (data.size() != rows * dim)
            throw std::invalid_argument("LatentBatch: data size does not match rows x dim");
        if (labels.size() != rows)
            throw std::invalid_argument("LatentBatch: labels row count mismatch");
        if (domains.size() != rows)
            throw std::invalid_argument("LatentBatch: domains row count mismatch");
    }
};

}  // namespace xlstance
