#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "compoda/composite.hpp"
#include "compoda/rng.hpp"
#include "compoda/vec.hpp"

namespace compoda {

// ---------------------------------------------------------------------------
// Smooth objectives
// ---------------------------------------------------------------------------

class SmoothFn {
  public:
    virtual ~SmoothFn() = default;
    virtual double value(const Vec& x) const = 0;
    virtual Vec gradient(const Vec& x) const = 0;
    virtual std::size_t dim() const = 0;
};

// f(x) = mu * log sum_i exp((<a_i, x> - b_i) / mu), rows a_i in R^d.
// Evaluated with max-subtraction so large |z|/mu never overflows.
class SoftmaxObjective : public SmoothFn {
  public:
    SoftmaxObjective() = default;
    SoftmaxObjective(std::size_t d, std::size_t k, double mu, std::vector<double> a_flat,
                     std::vector<double> b)
        : d_(d), k_(k), mu_(mu), a_(std::move(a_flat)), b_(std::move(b)) {
        if (a_.size() != d_ * k_ || b_.size() != k_)
            throw std::invalid_argument("SoftmaxObjective: shape mismatch");
        if (!(mu_ > 0.0)) throw std::invalid_argument("SoftmaxObjective: mu must be > 0");
    }

    std::size_t dim() const override { return d_; }
    std::size_t rows() const { return k_; }
    double mu() const { return mu_; }
    const std::vector<double>& a_flat() const { return a_; }
    const std::vector<double>& b() const { return b_; }
    const double* row(std::size_t i) const { return a_.data() + i * d_; }

    double value(const Vec& x) const override {
        if (x.size() != d_) throw std::invalid_argument("SoftmaxObjective::value: dim mismatch");
        double zmax = -std::numeric_limits<double>::infinity();
        std::vector<double> z(k_);
        for (std::size_t i = 0; i < k_; ++i) {
            const double* ai = row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d_; ++j) s += ai[j] * x[j];
            z[i] = (s - b_[i]) / mu_;
            zmax = std::max(zmax, z[i]);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < k_; ++i) acc += std::exp(z[i] - zmax);
        return mu_ * (std::log(acc) + zmax);
    }

    Vec gradient(const Vec& x) const override {
        if (x.size() != d_) throw std::invalid_argument("SoftmaxObjective::gradient: dim mismatch");
        std::vector<double> z(k_);
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k_; ++i) {
            const double* ai = row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d_; ++j) s += ai[j] * x[j];
            z[i] = (s - b_[i]) / mu_;
            zmax = std::max(zmax, z[i]);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < k_; ++i) {
            z[i] = std::exp(z[i] - zmax);
            acc += z[i];
        }
        Vec g(d_, 0.0);
        for (std::size_t i = 0; i < k_; ++i) {
            const double w = z[i] / acc;
            const double* ai = row(i);
            for (std::size_t j = 0; j < d_; ++j) g[j] += w * ai[j];
        }
        return g;
    }

    // Restriction of the objective to a subset of rows.
    SoftmaxObjective restrict_rows(const std::vector<std::size_t>& rows_idx) const {
        std::vector<double> a_sub;
        std::vector<double> b_sub;
        a_sub.reserve(rows_idx.size() * d_);
        b_sub.reserve(rows_idx.size());
        for (std::size_t i : rows_idx) {
            const double* ai = row(i);
            a_sub.insert(a_sub.end(), ai, ai + d_);
            b_sub.push_back(b_[i]);
        }
        return SoftmaxObjective(d_, rows_idx.size(), mu_, std::move(a_sub), std::move(b_sub));
    }

  private:
    std::size_t d_ = 0, k_ = 0;
    double mu_ = 1.0;
    std::vector<double> a_;  // row-major k x d
    std::vector<double> b_;
};

// Binary logistic loss over a sample subset:
// f(x) = mean_j log(1 + exp(-s_j <x, feat_j>)), s_j = 2 y_j - 1.
class LogisticObjective : public SmoothFn {
  public:
    LogisticObjective() = default;
    LogisticObjective(std::size_t d, std::shared_ptr<const std::vector<double>> features,
                      std::shared_ptr<const std::vector<int>> labels01,
                      std::vector<std::size_t> sample_idx)
        : d_(d), x_(std::move(features)), y_(std::move(labels01)), idx_(std::move(sample_idx)) {
        if (idx_.empty()) throw std::invalid_argument("LogisticObjective: empty sample set");
    }

    std::size_t dim() const override { return d_; }
    std::size_t samples() const { return idx_.size(); }

    double value(const Vec& x) const override {
        double acc = 0.0;
        for (std::size_t j : idx_) {
            const double t = -sign(j) * margin(j, x);
            // log(1 + e^t), stable on both tails
            acc += t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        }
        return acc / static_cast<double>(idx_.size());
    }

    Vec gradient(const Vec& x) const override {
        Vec g(d_, 0.0);
        const double inv_n = 1.0 / static_cast<double>(idx_.size());
        for (std::size_t j : idx_) {
            const double s = sign(j);
            const double t = -s * margin(j, x);
            const double w = -s * sigmoid(t) * inv_n;
            const double* f = x_->data() + j * d_;
            for (std::size_t c = 0; c < d_; ++c) g[c] += w * f[c];
        }
        return g;
    }

  private:
    double sign(std::size_t j) const { return (*y_)[j] == 1 ? 1.0 : -1.0; }

    double margin(std::size_t j, const Vec& x) const {
        const double* f = x_->data() + j * d_;
        double s = 0.0;
        for (std::size_t c = 0; c < d_; ++c) s += x[c] * f[c];
        return s;
    }

    static double sigmoid(double t) {
        return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
    }

    std::size_t d_ = 0;
    std::shared_ptr<const std::vector<double>> x_;  // row-major N x d
    std::shared_ptr<const std::vector<int>> y_;     // 0/1 per sample
    std::vector<std::size_t> idx_;
};

// ---------------------------------------------------------------------------
// Multi-client problem: f = (1/n) sum_i f_i, each f_i owned by one client.
// ---------------------------------------------------------------------------

class ClientSet {
  public:
    ClientSet() = default;
    explicit ClientSet(std::vector<std::shared_ptr<const SmoothFn>> clients)
        : clients_(std::move(clients)) {
        if (clients_.empty()) throw std::invalid_argument("ClientSet: needs at least one client");
        d_ = clients_[0]->dim();
        for (const auto& c : clients_)
            if (c->dim() != d_) throw std::invalid_argument("ClientSet: mixed dimensions");
    }

    std::size_t n() const { return clients_.size(); }
    std::size_t dim() const { return d_; }

    double value(const Vec& x) const {
        double s = 0.0;
        for (const auto& c : clients_) s += c->value(x);
        return s / static_cast<double>(clients_.size());
    }

    // (1/n) sum_i grad f_i; clients aggregated in index order.
    Vec gradient(const Vec& x) const {
        Vec g(d_, 0.0);
        for (const auto& c : clients_) add_in_place(g, c->gradient(x));
        return scale(1.0 / static_cast<double>(clients_.size()), g);
    }

    Vec client_gradient(std::size_t i, const Vec& x) const { return clients_.at(i)->gradient(x); }
    double client_value(std::size_t i, const Vec& x) const { return clients_.at(i)->value(x); }

    // grad f_i(x) + eps with eps ~ N(0, sigma^2/d I), so E||eps||^2 = sigma^2.
    Vec stochastic_client_gradient(std::size_t i, const Vec& x, double sigma, RngStream& rng) const {
        Vec g = clients_.at(i)->gradient(x);
        if (sigma > 0.0) {
            const double s = sigma / std::sqrt(static_cast<double>(d_));
            for (double& v : g) v += s * rng.normal();
        }
        return g;
    }

  private:
    std::vector<std::shared_ptr<const SmoothFn>> clients_;
    std::size_t d_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic softmax generation (recentred so that grad f(0) = 0)
// ---------------------------------------------------------------------------

inline SoftmaxObjective gen_softmax(std::size_t d, std::size_t k, double mu, std::uint64_t seed) {
    if (d < 1 || k < 1) throw std::invalid_argument("gen_softmax: d, k >= 1");
    if (!(mu > 0.0)) throw std::invalid_argument("gen_softmax: mu > 0");
    RngStream rng = RngStream::derive(seed, stream_id::data_gen);

    std::vector<double> a(d * k);
    std::vector<double> b(k);
    for (double& v : a) v = rng.uniform_in(-1.0, 1.0);
    for (double& v : b) v = rng.uniform_in(-1.0, 1.0);

    SoftmaxObjective prelim(d, k, mu, a, b);
    const Vec g0 = prelim.gradient(zeros(d));

    // a_i <- a_i - grad fhat(0): the softmax weights at 0 only see b, so the
    // shifted objective has exactly zero gradient at the origin.
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < d; ++j) a[i * d + j] -= g0[j];

    SoftmaxObjective out(d, k, mu, std::move(a), std::move(b));
    if (norm(out.gradient(zeros(d))) > 1e-10)
        throw std::runtime_error("gen_softmax: recentring failed");
    return out;
}

// ---------------------------------------------------------------------------
// Client partitioning
// ---------------------------------------------------------------------------

struct ClientPartition {
    std::vector<std::vector<std::size_t>> assignments;  // per client, sample indices
    std::size_t n() const { return assignments.size(); }
};

// frac_random of the samples are dealt round-robin after a uniform shuffle;
// the rest go to client (label mod n).
inline ClientPartition partition_heterogeneous(std::size_t N, const std::vector<int>& labels,
                                               std::size_t n, double frac_random,
                                               std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("partition_heterogeneous: n >= 1");
    if (n > N) throw std::invalid_argument("partition_heterogeneous: n > N");
    if (labels.size() != N) throw std::invalid_argument("partition_heterogeneous: labels size != N");
    if (frac_random < 0.0 || frac_random > 1.0)
        throw std::invalid_argument("partition_heterogeneous: frac_random in [0, 1]");

    RngStream rng = RngStream::derive(seed, stream_id::partition);
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Fisher-Yates
    for (std::size_t i = N - 1; i > 0; --i) {
        const std::size_t j = rng.uniform_index(i + 1);
        std::swap(idx[i], idx[j]);
    }

    const auto n_random = static_cast<std::size_t>(std::llround(frac_random * static_cast<double>(N)));
    ClientPartition part;
    part.assignments.resize(n);
    for (std::size_t r = 0; r < n_random; ++r) part.assignments[r % n].push_back(idx[r]);
    for (std::size_t r = n_random; r < N; ++r) {
        const int lab = labels[idx[r]];
        const std::size_t c = static_cast<std::size_t>(((lab % static_cast<int>(n)) + static_cast<int>(n))) % n;
        part.assignments[c].push_back(idx[r]);
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (part.assignments[c].empty())
            throw std::runtime_error("partition_heterogeneous: client " + std::to_string(c) +
                                     " received no samples (check n vs label coverage)");
        std::sort(part.assignments[c].begin(), part.assignments[c].end());
    }
    return part;
}

// Every client holds the full objective; local gradients differ only through
// the per-client noise. This is the homogeneous setting of the synthetic
// speedup experiment.
inline ClientSet share_softmax_across_clients(const SoftmaxObjective& p, std::size_t n) {
    auto shared = std::make_shared<SoftmaxObjective>(p);
    std::vector<std::shared_ptr<const SmoothFn>> clients(n, shared);
    return ClientSet(std::move(clients));
}

// Rows split uniformly at random into n clients, each f_i the softmax over its
// own rows. The global objective is then (1/n) sum f_i, which differs from the
// single-machine softmax for n > 1; F* must be recomputed numerically.
inline ClientSet split_softmax_to_clients(const SoftmaxObjective& p, std::size_t n,
                                          std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("split_softmax_to_clients: n >= 1");
    if (p.rows() < n) throw std::invalid_argument("split_softmax_to_clients: need k >= n");
    if (n == 1) {
        return ClientSet({std::make_shared<SoftmaxObjective>(p)});
    }
    std::vector<int> no_labels(p.rows(), 0);
    ClientPartition part = partition_heterogeneous(p.rows(), no_labels, n, 1.0, seed);
    std::vector<std::shared_ptr<const SmoothFn>> clients;
    clients.reserve(n);
    for (std::size_t c = 0; c < n; ++c)
        clients.push_back(std::make_shared<SoftmaxObjective>(p.restrict_rows(part.assignments[c])));
    return ClientSet(std::move(clients));
}

// ---------------------------------------------------------------------------
// CSV dataset: row = label, feature_1, ..., feature_d
// ---------------------------------------------------------------------------

struct Dataset {
    std::size_t N = 0, d = 0;
    std::shared_ptr<std::vector<double>> features;  // row-major N x d
    std::vector<int> labels;                        // raw labels as read
};

inline Dataset load_csv_dataset(const std::string& path, bool has_header = false,
                                bool normalize = false) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv_dataset: cannot open " + path);

    Dataset ds;
    ds.features = std::make_shared<std::vector<double>>();
    std::string line;
    std::size_t lineno = 0;
    bool skipped_header = !has_header;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const std::string cell = line.substr(pos, comma - pos);
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size() &&
                    cell.find_first_not_of(" \t", used) != std::string::npos)
                    throw std::invalid_argument("trailing junk");
                cells.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv_dataset: non-numeric cell '" + cell +
                                         "' at line " + std::to_string(lineno));
            }
            pos = comma + 1;
        }
        if (cells.size() < 2)
            throw std::runtime_error("load_csv_dataset: line " + std::to_string(lineno) +
                                     " has no features");
        if (ds.N == 0) {
            ds.d = cells.size() - 1;
        } else if (cells.size() - 1 != ds.d) {
            throw std::runtime_error("load_csv_dataset: ragged row at line " +
                                     std::to_string(lineno) + " (expected " +
                                     std::to_string(ds.d) + " features, got " +
                                     std::to_string(cells.size() - 1) + ")");
        }
        ds.labels.push_back(static_cast<int>(std::llround(cells[0])));
        ds.features->insert(ds.features->end(), cells.begin() + 1, cells.end());
        ++ds.N;
    }
    if (ds.N == 0) throw std::runtime_error("load_csv_dataset: empty file " + path);

    if (normalize) {
        // per-column min-max to [0, 1]
        for (std::size_t c = 0; c < ds.d; ++c) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < ds.N; ++r) {
                const double v = (*ds.features)[r * ds.d + c];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            const double span = hi - lo;
            for (std::size_t r = 0; r < ds.N; ++r) {
                double& v = (*ds.features)[r * ds.d + c];
                v = span > 0.0 ? (v - lo) / span : 0.0;
            }
        }
    }
    return ds;
}

// Build the n-client logistic problem from a dataset: raw labels drive the
// heterogeneous split, the loss is binary (positive_class vs rest).
inline ClientSet make_logistic_clients(const Dataset& ds, const ClientPartition& part,
                                       int positive_class) {
    auto y01 = std::make_shared<std::vector<int>>(ds.N);
    for (std::size_t j = 0; j < ds.N; ++j) (*y01)[j] = ds.labels[j] == positive_class ? 1 : 0;
    std::vector<std::shared_ptr<const SmoothFn>> clients;
    clients.reserve(part.n());
    for (const auto& idx : part.assignments)
        clients.push_back(std::make_shared<LogisticObjective>(ds.d, ds.features, y01, idx));
    return ClientSet(std::move(clients));
}

// ---------------------------------------------------------------------------
// Smoothness estimation
// ---------------------------------------------------------------------------

struct SmoothnessEstimate {
    double L_hat = 0.0;    // max ||grad f(x) - grad f(y)|| / ||x - y||
    double ell_hat = 0.0;  // max sqrt((1/n) sum_i ||grad f_i(x) - grad f_i(y)||^2) / ||x - y||
};

// Probe-pair estimates. These are lower bounds on the true constants; callers
// apply a safety factor or override from config.
inline SmoothnessEstimate estimate_smoothness(const ClientSet& prob, int probes, RngStream& rng,
                                              const Vec& around, double radius) {
    if (probes < 2) throw std::invalid_argument("estimate_smoothness: probes >= 2");
    const std::size_t d = prob.dim();
    const double s = radius / std::sqrt(static_cast<double>(d));
    SmoothnessEstimate est;
    for (int p = 0; p < probes; ++p) {
        Vec x = around, y = around;
        for (std::size_t j = 0; j < d; ++j) x[j] += s * rng.normal();
        for (std::size_t j = 0; j < d; ++j) y[j] += s * rng.normal();
        const double dist = norm(sub(x, y));
        if (dist == 0.0) continue;
        double sum_sq = 0.0;
        Vec gx_tot(d, 0.0), gy_tot(d, 0.0);
        for (std::size_t i = 0; i < prob.n(); ++i) {
            const Vec gx = prob.client_gradient(i, x);
            const Vec gy = prob.client_gradient(i, y);
            sum_sq += sq_norm(sub(gx, gy));
            add_in_place(gx_tot, gx);
            add_in_place(gy_tot, gy);
        }
        const double inv_n = 1.0 / static_cast<double>(prob.n());
        est.L_hat = std::max(est.L_hat, inv_n * norm(sub(gx_tot, gy_tot)) / dist);
        est.ell_hat = std::max(est.ell_hat, std::sqrt(sum_sq * inv_n) / dist);
    }
    return est;
}

// ---------------------------------------------------------------------------
// Deterministic reference solve for F* (FISTA with backtracking)
// ---------------------------------------------------------------------------

// Long exact-gradient reference run used to pin F* when no analytic value
// exists (softmax split across clients, logistic). Returns the best composite
// value seen.
inline double reference_solve(const ClientSet& prob, const CompositePart& psi, const Vec& x_init,
                              int rounds, double l0 = 1.0) {
    Vec x = x_init;
    Vec z = x_init;  // extrapolated point
    double theta = 1.0;
    double L = l0;
    double best = prob.value(x) + psi_value(psi, x);

    for (int it = 0; it < rounds; ++it) {
        const double fz = prob.value(z);
        const Vec gz = prob.gradient(z);
        Vec x_next;
        // backtracking on the quadratic upper model
        for (int bt = 0; bt < 60; ++bt) {
            x_next = prox_step(psi, gz, z, 1.0 / L);
            const Vec diff = sub(x_next, z);
            const double quad = fz + dot(gz, diff) + 0.5 * L * sq_norm(diff);
            if (prob.value(x_next) <= quad + 1e-15 * std::abs(quad)) break;
            L *= 2.0;
        }
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        z = x_next;
        axpy_in_place(z, (theta - 1.0) / theta_next, sub(x_next, x));
        x = x_next;
        theta = theta_next;
        L = std::max(l0, L * 0.5);  // allow the estimate to relax again

        const double F = prob.value(x) + psi_value(psi, x);
        best = std::min(best, F);
    }
    return best;
}

}  // namespace compoda
