#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "compoda/composite.hpp"
#include "compoda/compressor.hpp"
#include "compoda/feedback.hpp"
#include "compoda/problems.hpp"
#include "compoda/stepsize.hpp"
#include "compoda/trace.hpp"

namespace compoda {

enum class AlgorithmKind { econtrol_da, prox_ef, prox_ef21 };

// Fully resolved inputs for one simulated run. Everything downstream is a
// pure function of this struct.
struct RunSetup {
    ClientSet problem;
    CompositePart psi;
    Compressor comp;
    AlgorithmKind algo = AlgorithmKind::econtrol_da;
    MechanismKind mech = MechanismKind::econtrol;
    double eta = 1.0;        // EControl error scaling
    ScheduleSpec schedule;   // dual-averaging stepsize
    double h = 0.0;          // baseline prox step
    long T = 0;
    double a_t = 1.0;        // round weight (constant)
    double sigma = 0.0;      // per-client gradient noise (std)
    std::uint64_t seed = 0;
    double m_cost = 1.0;     // uncompressed-round cost
    bool debug = false;
    bool initial_step = false;
    Vec x0;
    double f_star_est = 0.0;
    double L_hat = 0.0;
    double ell_hat = 0.0;
    std::string config_echo;
};

// Server side of the dual-averaging update. S accumulates a_s * ghat_s, A the
// weights; the iterate is one prox from the anchor. gamma must never decrease.
struct ServerState {
    Vec x0;
    Vec x;
    Vec S;
    double A = 0.0;
    Vec g_hat;
    double gamma_prev = -1.0;
    long t = 0;

    // reservoir bookkeeping (the frozen vector itself lives on the clients)
    double A_frozen = 0.0;
    double gamma_frozen = 0.0;
    long tau_index = -1;
};

inline Vec da_update(ServerState& server, const Vec& g_hat_t, double a_t, double gamma_t,
                     const CompositePart& psi) {
    if (!(gamma_t > 0.0)) throw std::invalid_argument("da_update: gamma must be > 0");
    if (server.gamma_prev > 0.0 && gamma_t < server.gamma_prev)
        throw std::invalid_argument("da_update: decreasing gamma_t (schedule must be nondecreasing)");
    axpy_in_place(server.S, a_t, g_hat_t);
    server.A += a_t;
    server.gamma_prev = gamma_t;
    server.x = composite_prox(psi, server.S, server.A, gamma_t, server.x0);
    return server.x;
}

// One exact prox from the frozen cumulative-gradient sample; by construction
// this equals the virtual iterate at the retained round.
inline Vec final_output(const CompositePart& psi, const Vec& g_bar, double A_frozen,
                        double gamma_frozen, const Vec& x0) {
    if (!(A_frozen > 0.0)) throw std::runtime_error("final_output: no frozen reservoir sample");
    return composite_prox(psi, g_bar, A_frozen, gamma_frozen, x0);
}

// One stochastic proximal gradient step from x0 with
// gamma0 = max{2L, sqrt(2) sigma_g / R}; used before the main loop when psi is
// nonzero to replace the F(x0) - F* dependence of the rate by L R^2 terms.
inline Vec initial_gradient_step(const CompositePart& psi, const Vec& x0, const ClientSet& prob,
                                 double L, double sigma_per_client, double R,
                                 std::vector<RngStream>& noise_rngs) {
    if (!(L > 0.0) || !(R > 0.0))
        throw std::invalid_argument("initial_gradient_step: L, R must be > 0");
    const std::size_t n = prob.n();
    Vec g0 = zeros(prob.dim());
    for (std::size_t i = 0; i < n; ++i)
        add_in_place(g0, prob.stochastic_client_gradient(i, x0, sigma_per_client, noise_rngs[i]));
    g0 = scale(1.0 / static_cast<double>(n), g0);
    const double sigma_g = sigma_per_client / std::sqrt(static_cast<double>(n));
    const double gamma0 = std::max(2.0 * L, std::sqrt(2.0) * sigma_g / R);
    return composite_prox(psi, g0, 1.0, gamma0, x0);
}

namespace detail {

inline double composite_value(const ClientSet& prob, const CompositePart& psi, const Vec& x) {
    return prob.value(x) + psi_value(psi, x);
}

inline std::vector<RngStream> make_streams(std::uint64_t seed, std::uint64_t base, std::size_t n) {
    std::vector<RngStream> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(RngStream::derive(seed, base + i));
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// EControl with dual averaging (full loop)
// ---------------------------------------------------------------------------
//
// Round structure: the server draws the reservoir bit tau_t ~ Bern(a_t/A_{t+1})
// and broadcasts it (1 bit, tallied separately); each client draws its
// stochastic gradient, updates its cumulative-gradient reservoir, runs the
// EControl step and uploads the compressed difference (cost 1); the server
// aggregates by client index and performs the dual-averaging update. The
// ghat_{-1} initialization and the final collection of the frozen sums each
// cost one uncompressed round (m), as does the optional initial step.
inline RunTrace run_econtrol_da(const RunSetup& su) {
    const std::size_t n = su.problem.n();
    const std::size_t d = su.problem.dim();

    auto noise_rngs = detail::make_streams(su.seed, stream_id::noise_client, n);
    auto comp_rngs = detail::make_streams(su.seed, stream_id::compressor_client, n);
    RngStream tau_rng = RngStream::derive(su.seed, stream_id::tau_chain);

    RunTrace tr;
    tr.F_star_est = su.f_star_est;
    tr.sigma = su.sigma;
    tr.config_echo = su.config_echo;
    if (su.debug) {
        tr.debug.emplace();
        tr.debug->clients.resize(n);
    }

    if (su.T <= 0) {
        tr.x_final = su.x0;
        tr.final_F_real = detail::composite_value(su.problem, su.psi, su.x0) - su.f_star_est;
        if (tr.debug) {
            tr.debug->F_x0 = tr.final_F_real + su.f_star_est;
            tr.debug->F_xT = tr.debug->F_x0;
        }
        return tr;
    }

    double comm = 0.0;
    Vec anchor = su.x0;
    const bool take_initial = su.initial_step && !su.psi.is_zero();
    if (take_initial) {
        const double R = su.schedule.params.R0 > 0.0 ? su.schedule.params.R0 : norm(su.x0);
        anchor = initial_gradient_step(su.psi, su.x0, su.problem, su.L_hat, su.sigma,
                                       R > 0.0 ? R : 1.0, noise_rngs);
        comm += su.m_cost;
    }

    // ghat_{-1}^i: one uncompressed round
    std::vector<EControlClientState> clients;
    clients.reserve(n);
    Vec g_hat0 = zeros(d);
    for (std::size_t i = 0; i < n; ++i) {
        Vec gi = su.problem.stochastic_client_gradient(i, anchor, su.sigma, noise_rngs[i]);
        add_in_place(g_hat0, gi);
        clients.emplace_back(std::move(gi), su.eta);
    }
    comm += su.m_cost;

    ServerState server;
    server.x0 = anchor;
    server.x = anchor;
    server.S = zeros(d);
    server.g_hat = scale(1.0 / static_cast<double>(n), g_hat0);

    Vec g_true_sum = zeros(d);  // sum_{k<=t} a_k g_k, server aggregate
    Vec x_virtual = anchor;     // xtilde_t, anchored like the real iterate
    std::vector<Vec> prev_g(su.debug ? n : 0);
    std::vector<Vec> shadow(su.debug ? n : 0, zeros(d));

    long tau_bits = 0;

    for (long t = 0; t < su.T; ++t) {
        const double gamma_t = su.schedule.gamma_at(t, su.T);

        RoundRecord row;
        row.t = t;
        row.err_norm = norm(sub(server.S, g_true_sum));
        row.dist_vr = norm(sub(x_virtual, server.x));

        const double A_next = server.A + su.a_t;
        const bool tau = tau_rng.bernoulli(su.a_t / A_next);
        ++tau_bits;

        Vec delta_avg = zeros(d);
        Vec g_avg = zeros(d);
        for (std::size_t i = 0; i < n; ++i) {
            Vec g = su.problem.stochastic_client_gradient(i, server.x, su.sigma, noise_rngs[i]);
            clients[i].reservoir_update(g, su.a_t, tau);
            Vec Delta = clients[i].step(g, su.comp, comp_rngs[i]);
            add_in_place(delta_avg, Delta);
            add_in_place(g_avg, g);
            if (su.debug) {
                auto& log = tr.debug->clients[i];
                log.e_sq.push_back(sq_norm(clients[i].error()));
                log.ghat_err_sq.push_back(sq_norm(sub(clients[i].g_hat(), g)));
                if (t > 0) log.gdiff_sq.push_back(sq_norm(sub(g, prev_g[i])));
                double gap = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    shadow[i][j] += clients[i].g_hat()[j] - g[j];
                    gap = std::max(gap, std::abs(shadow[i][j] - clients[i].error()[j]));
                }
                log.shadow_gap.push_back(gap);
                prev_g[i] = std::move(g);
            }
        }
        delta_avg = scale(1.0 / static_cast<double>(n), delta_avg);
        g_avg = scale(1.0 / static_cast<double>(n), g_avg);
        add_in_place(server.g_hat, delta_avg);

        const Vec x_prev = server.x;
        da_update(server, server.g_hat, su.a_t, gamma_t, su.psi);
        comm += 1.0;  // one compressed upload per client

        if (tau) {
            server.A_frozen = A_next;
            server.gamma_frozen = gamma_t;
            server.tau_index = t;
        }

        // True-gradient aggregate, recomputed from the client running sums so
        // the final collection reproduces it bit-for-bit.
        g_true_sum = zeros(d);
        for (std::size_t i = 0; i < n; ++i) add_in_place(g_true_sum, clients[i].g_bar_running());
        g_true_sum = scale(1.0 / static_cast<double>(n), g_true_sum);
        x_virtual = composite_prox(su.psi, g_true_sum, server.A, gamma_t, anchor);

        row.F_real = detail::composite_value(su.problem, su.psi, server.x) - su.f_star_est;
        row.F_virtual = detail::composite_value(su.problem, su.psi, x_virtual) - su.f_star_est;
        row.gamma_t = gamma_t;
        row.comm_cost_cum = comm;
        row.tau_bits_cum = tau_bits;
        tr.rows.push_back(row);

        if (su.debug) {
            tr.debug->gbar_log.push_back(g_true_sum);
            tr.debug->gamma_log.push_back(gamma_t);
            tr.debug->rsq.push_back(sq_norm(sub(server.x, x_prev)));
            tr.debug->inner_ghat_err.push_back(dot(sub(server.g_hat, g_avg), sub(server.x, x_prev)));
        }
        server.t = t + 1;
    }

    // Final collection of the frozen sums (uncompressed) and the sampled output.
    Vec g_bar = zeros(d);
    for (std::size_t i = 0; i < n; ++i) add_in_place(g_bar, clients[i].g_bar_frozen());
    g_bar = scale(1.0 / static_cast<double>(n), g_bar);
    comm += su.m_cost;
    tr.x_bar = final_output(su.psi, g_bar, server.A_frozen, server.gamma_frozen, anchor);

    tr.x_final = server.x;
    tr.anchor = anchor;
    tr.A_frozen = server.A_frozen;
    tr.gamma_frozen = server.gamma_frozen;
    tr.comm_total = comm;
    tr.tau_bits_total = tau_bits;
    tr.tau_index = server.tau_index;
    tr.gamma_last = server.gamma_prev;
    tr.final_F_real = tr.rows.back().F_real;
    tr.final_F_virtual = tr.rows.back().F_virtual;
    tr.F_xbar = detail::composite_value(su.problem, su.psi, tr.x_bar) - su.f_star_est;
    if (su.debug) {
        tr.debug->F_x0 = detail::composite_value(su.problem, su.psi, anchor);
        tr.debug->F_xT = detail::composite_value(su.problem, su.psi, server.x);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Proximal baselines
// ---------------------------------------------------------------------------

// Proximal EF: clients feed back their compression error into the next
// message; the server averages the reconstructed gradients and takes the
// classic proximal step with constant h.
inline RunTrace run_prox_ef(const RunSetup& su) {
    if (!(su.h > 0.0)) throw std::invalid_argument("run_prox_ef: h must be > 0");
    const std::size_t n = su.problem.n();
    const std::size_t d = su.problem.dim();

    auto noise_rngs = detail::make_streams(su.seed, stream_id::noise_client, n);
    auto comp_rngs = detail::make_streams(su.seed, stream_id::compressor_client, n);

    RunTrace tr;
    tr.F_star_est = su.f_star_est;
    tr.sigma = su.sigma;
    tr.config_echo = su.config_echo;

    std::vector<EFClientState> clients(n, EFClientState(d));
    Vec x = su.x0;
    Vec ghat_sum = zeros(d);    // sum_k ghat_k
    Vec g_true_sum = zeros(d);  // sum_k g_k (server aggregate)
    double comm = 0.0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (long t = 0; t < su.T; ++t) {
        RoundRecord row;
        row.t = t;
        row.err_norm = norm(sub(ghat_sum, g_true_sum));

        Vec ghat_avg = zeros(d);
        Vec g_avg = zeros(d);
        for (std::size_t i = 0; i < n; ++i) {
            Vec g = su.problem.stochastic_client_gradient(i, x, su.sigma, noise_rngs[i]);
            add_in_place(ghat_avg, clients[i].step(g, su.comp, comp_rngs[i]));
            add_in_place(g_avg, g);
        }
        ghat_avg = scale(1.0 / static_cast<double>(n), ghat_avg);
        g_avg = scale(1.0 / static_cast<double>(n), g_avg);
        add_in_place(ghat_sum, ghat_avg);
        add_in_place(g_true_sum, g_avg);

        x = prox_step(su.psi, ghat_avg, x, su.h);
        comm += 1.0;

        row.F_real = detail::composite_value(su.problem, su.psi, x) - su.f_star_est;
        row.F_virtual = nan;
        row.dist_vr = nan;
        row.gamma_t = 1.0 / su.h;
        row.comm_cost_cum = comm;
        row.tau_bits_cum = 0;
        tr.rows.push_back(row);
    }

    tr.x_final = x;
    tr.comm_total = comm;
    tr.final_F_real = tr.rows.empty()
                          ? detail::composite_value(su.problem, su.psi, x) - su.f_star_est
                          : tr.rows.back().F_real;
    tr.final_F_virtual = nan;
    tr.F_xbar = nan;
    return tr;
}

// Proximal EF21: gradient-difference compression with an uncompressed
// ghat_{-1} initialization round.
inline RunTrace run_prox_ef21(const RunSetup& su) {
    if (!(su.h > 0.0)) throw std::invalid_argument("run_prox_ef21: h must be > 0");
    const std::size_t n = su.problem.n();
    const std::size_t d = su.problem.dim();

    auto noise_rngs = detail::make_streams(su.seed, stream_id::noise_client, n);
    auto comp_rngs = detail::make_streams(su.seed, stream_id::compressor_client, n);

    RunTrace tr;
    tr.F_star_est = su.f_star_est;
    tr.sigma = su.sigma;
    tr.config_echo = su.config_echo;

    Vec x = su.x0;
    double comm = 0.0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    if (su.T <= 0) {
        tr.x_final = x;
        tr.final_F_real = detail::composite_value(su.problem, su.psi, x) - su.f_star_est;
        return tr;
    }

    std::vector<EF21ClientState> clients;
    clients.reserve(n);
    Vec g_hat = zeros(d);
    for (std::size_t i = 0; i < n; ++i) {
        Vec gi = su.problem.stochastic_client_gradient(i, x, su.sigma, noise_rngs[i]);
        add_in_place(g_hat, gi);
        clients.emplace_back(std::move(gi));
    }
    g_hat = scale(1.0 / static_cast<double>(n), g_hat);
    comm += su.m_cost;

    Vec ghat_sum = zeros(d);
    Vec g_true_sum = zeros(d);

    for (long t = 0; t < su.T; ++t) {
        RoundRecord row;
        row.t = t;
        row.err_norm = norm(sub(ghat_sum, g_true_sum));

        Vec delta_avg = zeros(d);
        Vec g_avg = zeros(d);
        for (std::size_t i = 0; i < n; ++i) {
            Vec g = su.problem.stochastic_client_gradient(i, x, su.sigma, noise_rngs[i]);
            add_in_place(delta_avg, clients[i].step(g, su.comp, comp_rngs[i]));
            add_in_place(g_avg, g);
        }
        delta_avg = scale(1.0 / static_cast<double>(n), delta_avg);
        g_avg = scale(1.0 / static_cast<double>(n), g_avg);
        add_in_place(g_hat, delta_avg);
        add_in_place(ghat_sum, g_hat);
        add_in_place(g_true_sum, g_avg);

        x = prox_step(su.psi, g_hat, x, su.h);
        comm += 1.0;

        row.F_real = detail::composite_value(su.problem, su.psi, x) - su.f_star_est;
        row.F_virtual = nan;
        row.dist_vr = nan;
        row.gamma_t = 1.0 / su.h;
        row.comm_cost_cum = comm;
        row.tau_bits_cum = 0;
        tr.rows.push_back(row);
    }

    tr.x_final = x;
    tr.comm_total = comm;
    tr.final_F_real = tr.rows.back().F_real;
    tr.final_F_virtual = nan;
    tr.F_xbar = nan;
    return tr;
}

inline RunTrace run_experiment(const RunSetup& su) {
    switch (su.algo) {
        case AlgorithmKind::econtrol_da:
            return run_econtrol_da(su);
        case AlgorithmKind::prox_ef:
            return run_prox_ef(su);
        case AlgorithmKind::prox_ef21:
            return run_prox_ef21(su);
    }
    throw std::logic_error("run_experiment: unknown algorithm");
}

}  // namespace compoda
