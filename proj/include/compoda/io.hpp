#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "compoda/problems.hpp"
#include "compoda/trace.hpp"

namespace compoda {

// ---------------------------------------------------------------------------
// Softmax instance file:
//   line 1: "softmax,<d>,<k>,<mu>"
//   line 2: b_0,...,b_{k-1}
//   next k lines: row a_i as d comma-separated values
// All numbers use shortest round-trip formatting, so regeneration with the
// same seed is byte-identical.
// ---------------------------------------------------------------------------

inline std::string softmax_instance_to_string(const SoftmaxObjective& p) {
    std::ostringstream out;
    out << "softmax," << p.dim() << ',' << p.rows() << ',' << format_double(p.mu()) << "\n";
    for (std::size_t i = 0; i < p.rows(); ++i) {
        if (i) out << ',';
        out << format_double(p.b()[i]);
    }
    out << "\n";
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const double* ai = p.row(i);
        for (std::size_t j = 0; j < p.dim(); ++j) {
            if (j) out << ',';
            out << format_double(ai[j]);
        }
        out << "\n";
    }
    return out.str();
}

inline SoftmaxObjective softmax_instance_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw std::runtime_error("softmax instance: truncated file");
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= s.size()) {
            std::size_t comma = s.find(',', pos);
            if (comma == std::string::npos) comma = s.size();
            cells.push_back(s.substr(pos, comma - pos));
            pos = comma + 1;
        }
        return cells;
    };

    next_line();
    auto head = split(line);
    if (head.size() != 4 || head[0] != "softmax")
        throw std::runtime_error("softmax instance: bad header line");
    const auto d = static_cast<std::size_t>(std::stoul(head[1]));
    const auto k = static_cast<std::size_t>(std::stoul(head[2]));
    const double mu = parse_double(head[3]);

    next_line();
    auto bcells = split(line);
    if (bcells.size() != k) throw std::runtime_error("softmax instance: wrong b length");
    std::vector<double> b(k);
    for (std::size_t i = 0; i < k; ++i) b[i] = parse_double(bcells[i]);

    std::vector<double> a(d * k);
    for (std::size_t i = 0; i < k; ++i) {
        next_line();
        auto cells = split(line);
        if (cells.size() != d)
            throw std::runtime_error("softmax instance: row " + std::to_string(i) + " has wrong length");
        for (std::size_t j = 0; j < d; ++j) a[i * d + j] = parse_double(cells[j]);
    }
    return SoftmaxObjective(d, k, mu, std::move(a), std::move(b));
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Synthetic logistic CSV: `classes` Gaussian blobs in [-1,1]^d, label first.
// Label-correlated features make the heterogeneous split meaningful.
// ---------------------------------------------------------------------------
inline std::string gen_logistic_csv(std::size_t N, std::size_t d, int classes, std::uint64_t seed) {
    if (N < 1 || d < 1 || classes < 2) throw std::invalid_argument("gen_logistic_csv: bad shape");
    RngStream rng = RngStream::derive(seed, stream_id::data_gen);
    std::vector<double> centers(static_cast<std::size_t>(classes) * d);
    for (double& v : centers) v = rng.uniform_in(-1.0, 1.0);

    std::ostringstream out;
    for (std::size_t r = 0; r < N; ++r) {
        const int c = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(classes)));
        out << c;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = centers[static_cast<std::size_t>(c) * d + j] + 0.4 * rng.normal();
            out << ',' << format_double(v);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace compoda
