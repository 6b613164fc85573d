#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "compoda/vec.hpp"

namespace compoda {

// One row per communication round.
//   err_norm = ||e_t||, e_t = sum_{k<t} a_k (ghat_k - g_k)   (server aggregate)
//   dist_vr  = ||xtilde_t - x_t||
//   F_real / F_virtual evaluate the iterates produced by round t (x_{t+1}).
struct RoundRecord {
    long t = 0;
    double F_real = 0.0;
    double F_virtual = 0.0;
    double err_norm = 0.0;
    double dist_vr = 0.0;
    double gamma_t = 0.0;
    double comm_cost_cum = 0.0;
    long tau_bits_cum = 0;
};

// Per-client scalar series kept in debug mode; enough to evaluate the error
// accounting checks without retaining full vectors.
struct ClientDebugLog {
    std::vector<double> e_sq;        // ||e_t||^2 for t = 1..T (index t-1)
    std::vector<double> ghat_err_sq; // ||ghat_t - g_t||^2 for t = 0..T-1
    std::vector<double> gdiff_sq;    // ||g_{t+1} - g_t||^2 for t = 0..T-2
    std::vector<double> shadow_gap;  // | e_t - running shadow sum | per round, 0 when exact
};

struct DebugData {
    std::vector<Vec> gbar_log;      // per round: (1/n) sum_i of client running sums
    std::vector<double> gamma_log;  // gamma_t per round
    std::vector<double> rsq;        // ||x_{t+1} - x_t||^2
    std::vector<double> inner_ghat_err;  // <ghat_t - g_t, x_{t+1} - x_t>
    double F_x0 = 0.0;
    double F_xT = 0.0;
    std::vector<ClientDebugLog> clients;
};

struct RunTrace {
    std::vector<RoundRecord> rows;
    Vec x_final;          // real iterate x_T
    Vec x_bar;            // sampled virtual-iterate output (empty for baselines)
    Vec anchor;           // dual-averaging anchor (x0, or x0' after the initial step)
    double A_frozen = 0.0;      // reservoir state backing x_bar
    double gamma_frozen = 0.0;
    double F_star_est = 0.0;
    double final_F_real = 0.0;
    double final_F_virtual = 0.0;
    double F_xbar = 0.0;  // F(x_bar) - F_star_est
    double comm_total = 0.0;      // per-client vector units, init/final rounds included
    long tau_bits_total = 0;
    long tau_index = -1;          // frozen reservoir round, -1 if none
    double sigma = 0.0;
    double gamma_last = 0.0;
    std::string config_echo;
    std::optional<DebugData> debug;
};

// ---------------------------------------------------------------------------
// CSV round-trip formatting (shortest decimal that reparses exactly)
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("parse_double: bad cell '" + s + "'");
    return v;
}

inline constexpr const char* kTraceHeader =
    "t,F_real,F_virtual,err_norm,dist_vr,gamma_t,comm_cost_cum,tau_bits_cum";

// Leading '#' lines carry run metadata (F* estimate); the column row and the
// data rows below it are the normative trace format.
inline std::string emit_trace_csv(const RunTrace& tr) {
    std::ostringstream out;
    out << "# f_star_est=" << format_double(tr.F_star_est) << "\n";
    out << kTraceHeader << "\n";
    for (const RoundRecord& r : tr.rows) {
        out << r.t << ',' << format_double(r.F_real) << ',' << format_double(r.F_virtual) << ','
            << format_double(r.err_norm) << ',' << format_double(r.dist_vr) << ','
            << format_double(r.gamma_t) << ',' << format_double(r.comm_cost_cum) << ','
            << r.tau_bits_cum << "\n";
    }
    return out.str();
}

inline std::vector<RoundRecord> parse_trace_csv(const std::string& text,
                                                double* f_star_out = nullptr) {
    std::istringstream in(text);
    std::string line;
    std::vector<RoundRecord> rows;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# f_star_est=";
            if (f_star_out && line.rfind(key, 0) == 0) *f_star_out = parse_double(line.substr(key.size()));
            continue;
        }
        if (!saw_header) {
            if (line != kTraceHeader) throw std::runtime_error("parse_trace_csv: bad header row");
            saw_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            cells.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (cells.size() != 8) throw std::runtime_error("parse_trace_csv: expected 8 columns");
        RoundRecord r;
        r.t = std::stol(cells[0]);
        r.F_real = parse_double(cells[1]);
        r.F_virtual = parse_double(cells[2]);
        r.err_norm = parse_double(cells[3]);
        r.dist_vr = parse_double(cells[4]);
        r.gamma_t = parse_double(cells[5]);
        r.comm_cost_cum = parse_double(cells[6]);
        r.tau_bits_cum = std::stol(cells[7]);
        rows.push_back(r);
    }
    if (!saw_header) throw std::runtime_error("parse_trace_csv: no header row");
    return rows;
}

}  // namespace compoda
