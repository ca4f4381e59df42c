#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elrr/core.hpp"
#include "elrr/errors.hpp"
#include "elrr/quadrature.hpp"

namespace elrr {

enum class OutputFormat { csv, json };

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Optional per-sample (tau, q, s) columns from a quadrature solution aligned
// with the trajectory samples.
struct QsColumns {
    std::vector<double> tau, q, s;
};

inline std::string trajectory_csv(const Trajectory& traj,
                                  const QsColumns* qs = nullptr) {
    if (traj.samples.empty())
        throw config_error("cannot serialize an empty trajectory");
    std::ostringstream out;
    out << "t,x,y,px,py,H,I";
    if (qs) out << ",tau,q,s";
    out << "\n";
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        out << fmt17(s.state.t) << ',' << fmt17(s.state.x) << ','
            << fmt17(s.state.y) << ',' << fmt17(s.state.px) << ','
            << fmt17(s.state.py) << ',' << fmt17(s.H) << ',' << fmt17(s.I);
        if (qs)
            out << ',' << fmt17(qs->tau[i]) << ',' << fmt17(qs->q[i]) << ','
                << fmt17(qs->s[i]);
        out << "\n";
    }
    return out.str();
}

inline nlohmann::json trajectory_json(const Trajectory& traj,
                                      const QsColumns* qs = nullptr) {
    if (traj.samples.empty())
        throw config_error("cannot serialize an empty trajectory");
    nlohmann::json j;
    j["system"] = traj.system_id;
    j["integrator"] = traj.integrator;
    j["abs_tol"] = traj.abs_tol;
    j["rel_tol"] = traj.rel_tol;
    j["step"] = traj.step;
    j["accepted_steps"] = traj.accepted_steps;
    j["rejected_steps"] = traj.rejected_steps;
    auto col = [&](auto get) {
        std::vector<std::string> v;
        v.reserve(traj.samples.size());
        for (const auto& s : traj.samples) v.push_back(fmt17(get(s)));
        return v;
    };
    j["t"] = col([](const TrajectorySample& s) { return s.state.t; });
    j["x"] = col([](const TrajectorySample& s) { return s.state.x; });
    j["y"] = col([](const TrajectorySample& s) { return s.state.y; });
    j["px"] = col([](const TrajectorySample& s) { return s.state.px; });
    j["py"] = col([](const TrajectorySample& s) { return s.state.py; });
    j["H"] = col([](const TrajectorySample& s) { return s.H; });
    j["I"] = col([](const TrajectorySample& s) { return s.I; });
    if (qs) {
        auto strs = [](const std::vector<double>& v) {
            std::vector<std::string> out;
            out.reserve(v.size());
            for (double d : v) out.push_back(fmt17(d));
            return out;
        };
        j["tau"] = strs(qs->tau);
        j["q"] = strs(qs->q);
        j["s"] = strs(qs->s);
    }
    return j;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw error("cannot open output file " + path);
    f << content;
    if (!f) throw error("failed writing " + path);
}

inline void serialize_trajectory(const Trajectory& traj, OutputFormat fmt,
                                 const std::string& path,
                                 const QsColumns* qs = nullptr) {
    if (fmt == OutputFormat::csv)
        write_file(path, trajectory_csv(traj, qs));
    else
        write_file(path, trajectory_json(traj, qs).dump(1) + "\n");
}

// Read back a trajectory CSV written by trajectory_csv (used by round-trip
// tests and the compare pipeline).
inline Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw error("empty trajectory file " + path);
    Trajectory traj;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() < 7) throw error("malformed trajectory row in " + path);
        traj.samples.push_back(
            {{vals[0], vals[1], vals[2], vals[3], vals[4]}, vals[5], vals[6]});
    }
    return traj;
}

}  // namespace elrr
