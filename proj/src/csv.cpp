#include "netkin/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "netkin/error.hpp"

namespace netkin {

std::string format_number(double x) {
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

namespace {

void header(std::ostream &out, int n, bool with_se) {
    out << "t";
    for (const char *name : {"rho", "mom", "m", "uchi", "uint"})
        for (int i = 1; i <= n; ++i) out << ',' << name << '_' << i;
    out << ",total_mass,total_mom";
    if (with_se)
        for (const char *name : {"rho_se", "mom_se"})
            for (int i = 1; i <= n; ++i) out << ',' << name << '_' << i;
    out << '\n';
}

void row(std::ostream &out, const MacroState &s, const ControlSignal &u) {
    const int n = s.size();
    const NodeMeans means = derived_means(s);
    out << format_number(s.t);
    for (int i = 0; i < n; ++i) out << ',' << format_number(s.rho[i]);
    for (int i = 0; i < n; ++i) out << ',' << format_number(s.mom[i]);
    for (int i = 0; i < n; ++i) {
        out << ',';
        if (means.defined[i]) out << format_number(means.m[i]);
    }
    for (int i = 0; i < n; ++i) out << ',' << format_number(u.u_chi[i]);
    for (int i = 0; i < n; ++i) out << ',' << format_number(u.u_interaction[i]);
    out << ',' << format_number(s.total_mass()) << ',' << format_number(s.total_moment());
}

} // namespace

void write_trajectory_csv(std::ostream &out, const Trajectory &traj) {
    if (traj.size() == 0) return;
    header(out, traj.states.front().size(), false);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        row(out, traj.states[k], traj.controls[k]);
        out << '\n';
    }
}

void write_mc_csv(std::ostream &out, const std::vector<McTrajectory> &replicas) {
    if (replicas.empty() || replicas.front().samples.empty()) return;
    const auto &first = replicas.front().samples;
    const int n = first.front().estimate.state.size();
    const double r = static_cast<double>(replicas.size());
    for (const auto &rep : replicas)
        if (rep.samples.size() != first.size())
            fail(ErrorCode::DimensionMismatch, "replicas have different sample counts");
    header(out, n, true);
    for (std::size_t k = 0; k < first.size(); ++k) {
        if (replicas.size() == 1) {
            const auto &s = first[k];
            row(out, s.estimate.state, s.controls);
            for (int i = 0; i < n; ++i) out << ',' << format_number(s.estimate.rho_se[i]);
            for (int i = 0; i < n; ++i) out << ',' << format_number(s.estimate.mom_se[i]);
            out << '\n';
            continue;
        }
        MacroState mean{Vector::Zero(n), Vector::Zero(n), first[k].t};
        ControlSignal u{Vector::Zero(n), Vector::Zero(n), first[k].t, NoteNone};
        Vector rho_sq = Vector::Zero(n), mom_sq = Vector::Zero(n);
        for (const auto &rep : replicas) {
            const auto &s = rep.samples[k];
            mean.rho += s.estimate.state.rho;
            mean.mom += s.estimate.state.mom;
            rho_sq += s.estimate.state.rho.cwiseAbs2();
            mom_sq += s.estimate.state.mom.cwiseAbs2();
            u.u_chi += s.controls.u_chi;
            u.u_interaction += s.controls.u_interaction;
        }
        mean.rho /= r;
        mean.mom /= r;
        u.u_chi /= r;
        u.u_interaction /= r;
        row(out, mean, u);
        // sample variance across replicas, then standard error of their mean
        auto se = [&](double sum_sq, double m) {
            const double var = std::max(0.0, (sum_sq - r * m * m) / (r - 1.0));
            return std::sqrt(var / r);
        };
        for (int i = 0; i < n; ++i) out << ',' << format_number(se(rho_sq[i], mean.rho[i]));
        for (int i = 0; i < n; ++i) out << ',' << format_number(se(mom_sq[i], mean.mom[i]));
        out << '\n';
    }
}

} // namespace netkin
