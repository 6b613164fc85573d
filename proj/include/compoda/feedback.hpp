#pragma once

#include <cmath>
#include <stdexcept>

#include "compoda/compressor.hpp"
#include "compoda/vec.hpp"

namespace compoda {

enum class MechanismKind { econtrol, ef, ef21 };

// Theoretical error-scaling parameter eta = delta / (3 sqrt(1-delta) (1 + sqrt(1-delta))).
// At delta = 1 the formula is undefined; with exact compression the message
// delta_t is transmitted losslessly, so e stays at zero and any eta acts the
// same. We return 1 there.
inline double eta_default(double delta) {
    if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("eta_default: delta in (0, 1]");
    if (delta == 1.0) return 1.0;
    const double s = std::sqrt(1.0 - delta);
    return delta / (3.0 * s * (1.0 + s));
}

// EControl client round-machine:
//   delta_t = g_t - ghat_{t-1} - eta * e_t
//   Delta_t = C(delta_t)
//   ghat_t  = ghat_{t-1} + Delta_t
//   e_{t+1} = e_t + ghat_t - g_t
// Initialization: e_0 = 0 and ghat_{-1} = first stochastic gradient at x_0,
// communicated over the uncompressed channel.
class EControlClientState {
  public:
    EControlClientState() = default;

    EControlClientState(Vec g_hat_init, double eta) : g_hat_prev_(std::move(g_hat_init)), eta_(eta) {
        e_ = zeros(g_hat_prev_.size());
        g_bar_running_ = zeros(g_hat_prev_.size());
        g_bar_frozen_ = zeros(g_hat_prev_.size());
    }

    Vec step(const Vec& g_t, const Compressor& c, RngStream& rng) {
        check_same_size(g_t, g_hat_prev_, "econtrol_step");
        Vec delta(g_t.size());
        for (std::size_t j = 0; j < g_t.size(); ++j)
            delta[j] = g_t[j] - g_hat_prev_[j] - eta_ * e_[j];
        Vec Delta = compress(c, delta, rng);
        // ghat_t = ghat_{t-1} + Delta_t, evaluated through the compression
        // residual Delta - delta (exact per component for the shipped
        // compressors), so a lossless channel keeps ghat_t == g_t bitwise and
        // the error state vanishes identically at delta = 1.
        for (std::size_t j = 0; j < g_t.size(); ++j)
            g_hat_prev_[j] = g_t[j] - eta_ * e_[j] + (Delta[j] - delta[j]);
        for (std::size_t j = 0; j < g_t.size(); ++j) e_[j] += g_hat_prev_[j] - g_t[j];
        return Delta;
    }

    // Reservoir bookkeeping: the running sum always absorbs a_t * g_t; the
    // frozen snapshot only moves when the server's tau bit fired this round.
    void reservoir_update(const Vec& g_t, double a_t, bool tau) {
        axpy_in_place(g_bar_running_, a_t, g_t);
        if (tau) g_bar_frozen_ = g_bar_running_;
    }

    const Vec& error() const { return e_; }
    const Vec& g_hat() const { return g_hat_prev_; }
    const Vec& g_bar_running() const { return g_bar_running_; }
    const Vec& g_bar_frozen() const { return g_bar_frozen_; }
    double eta() const { return eta_; }

  private:
    Vec g_hat_prev_;
    Vec e_;
    Vec g_bar_running_;
    Vec g_bar_frozen_;
    double eta_ = 1.0;
};

// Classic error feedback:
//   delta_t = g_t - e_t,  ghat_t = C(delta_t),  e_{t+1} = e_t + ghat_t - g_t
class EFClientState {
  public:
    EFClientState() = default;
    explicit EFClientState(std::size_t d) : e_(zeros(d)) {}

    Vec step(const Vec& g_t, const Compressor& c, RngStream& rng) {
        check_same_size(g_t, e_, "ef_step");
        Vec g_hat = compress(c, sub(g_t, e_), rng);
        for (std::size_t j = 0; j < g_t.size(); ++j) e_[j] += g_hat[j] - g_t[j];
        return g_hat;
    }

    const Vec& error() const { return e_; }

  private:
    Vec e_;
};

// EF21 gradient-difference compression:
//   Delta_t = C(g_t - ghat_{t-1}),  ghat_t = ghat_{t-1} + Delta_t
// Initialized like EControl via one uncompressed round.
class EF21ClientState {
  public:
    EF21ClientState() = default;
    explicit EF21ClientState(Vec g_hat_init) : g_hat_prev_(std::move(g_hat_init)) {}

    Vec step(const Vec& g_t, const Compressor& c, RngStream& rng) {
        check_same_size(g_t, g_hat_prev_, "ef21_step");
        Vec delta = sub(g_t, g_hat_prev_);
        Vec Delta = compress(c, delta, rng);
        // same residual evaluation as the EControl step: exact channels give
        // ghat_t == g_t bitwise
        for (std::size_t j = 0; j < g_t.size(); ++j)
            g_hat_prev_[j] = g_t[j] + (Delta[j] - delta[j]);
        return Delta;
    }

    const Vec& g_hat() const { return g_hat_prev_; }

  private:
    Vec g_hat_prev_;
};

}  // namespace compoda
