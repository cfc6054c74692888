#include "netkin/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "netkin/error.hpp"

namespace netkin {

ControlledSystem::ControlledSystem(TransitionMatrix p, ModelParams params, ControlLaw control)
    : m_p(std::move(p)), m_params(std::move(params)), m_control(std::move(control)) {
    m_params.validate(m_p.size());
}

ControlledSystem::ControlledSystem(TransitionMatrix p, ModelParams params,
                                   const ControlPolicy &policy, const MacroState &initial)
    : ControlledSystem(p, params, ControlLaw{}) {
    auto controller = std::make_shared<FeedbackController>(std::move(p), std::move(params), policy,
                                                           initial);
    m_control = [controller](const MacroState &s) { return controller->evaluate(s); };
}

ControlledSystem::Derivative ControlledSystem::evaluate(const MacroState &state,
                                                        ControlSignal *used) const {
    ControlSignal u = m_control(state);
    const bool mobility_active = (u.u_chi.array() != 0.0).any();
    Derivative d;
    if (mobility_active) {
        const TransitionMatrix pu = controlled_matrix(m_p, u.u_chi);
        d.rho = rhs_mass(state, pu, m_params.chi);
        d.mom = m_params.variant == ModelVariant::Exchange
                    ? rhs_moment_exchange(state, pu, m_params, u.u_interaction)
                    : rhs_moment_infection_healing(state, pu, m_params, u.u_interaction);
    } else {
        d.rho = rhs_mass(state, m_p, m_params.chi);
        d.mom = m_params.variant == ModelVariant::Exchange
                    ? rhs_moment_exchange(state, m_p, m_params, u.u_interaction)
                    : rhs_moment_infection_healing(state, m_p, m_params, u.u_interaction);
    }
    if (used) *used = std::move(u);
    return d;
}

double Trajectory::max_mass_drift() const {
    if (diagnostics.empty()) return 0.0;
    const double m0 = diagnostics.front().total_mass;
    double worst = 0.0;
    for (const auto &d : diagnostics) worst = std::max(worst, std::abs(d.total_mass - m0));
    return worst;
}

namespace {

MacroState axpy(const MacroState &y, double h, const ControlledSystem::Derivative &k, double t) {
    return MacroState{y.rho + h * k.rho, y.mom + h * k.mom, t};
}

SampleDiagnostics diagnose(const MacroState &s) {
    return {s.total_mass(), s.total_moment(), std::min(s.rho.minCoeff(), s.mom.minCoeff())};
}

void sanitize(MacroState &s) {
    auto fix = [&](Vector &v, const char *name) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) {
                std::ostringstream msg;
                msg << name << "[" << i + 1 << "] is not finite at t = " << s.t;
                fail(ErrorCode::NonFiniteState, msg.str());
            }
            if (v[i] < 0.0) {
                if (v[i] < -negative_clip_threshold) {
                    std::ostringstream msg;
                    msg << name << "[" << i + 1 << "] = " << v[i] << " at t = " << s.t;
                    fail(ErrorCode::NegativeStateBlowup, msg.str());
                }
                v[i] = 0.0;
            }
        }
    };
    fix(s.rho, "rho");
    fix(s.mom, "mom");
}

} // namespace

Trajectory integrate(const ControlledSystem &system, const MacroState &y0,
                     const IntegrationSettings &settings) {
    if (!(settings.dt > 0.0)) fail(ErrorCode::ValidationError, "dt must be > 0");
    if (!(settings.t_end > 0.0)) fail(ErrorCode::ValidationError, "t_end must be > 0");
    if (settings.record_every < 1) fail(ErrorCode::ValidationError, "record_every must be >= 1");
    const int n = system.matrix().size();
    if (y0.rho.size() != n || y0.mom.size() != n)
        fail(ErrorCode::DimensionMismatch, "initial state does not match the graph size");
    if ((y0.rho.array() < 0.0).any() || (y0.mom.array() < 0.0).any())
        fail(ErrorCode::ValidationError, "initial state must be nonnegative");

    Trajectory traj;
    const ModelParams &par = system.params();
    const double fastest =
        std::max({par.chi, par.variant == ModelVariant::Exchange ? par.mu : par.sigma,
                  par.variant == ModelVariant::Exchange ? 0.0 : par.gamma});
    if (fastest > 0.0 && settings.dt > 0.1 / fastest) {
        std::ostringstream msg;
        msg << "dt = " << settings.dt << " exceeds 0.1 / fastest rate (" << 0.1 / fastest
            << "); results may be inaccurate";
        traj.warnings.push_back(msg.str());
    }

    const long steps = std::max(1L, std::lround(settings.t_end / settings.dt));
    const double dt = settings.t_end / static_cast<double>(steps);
    const double mass0 = y0.total_mass();

    MacroState y = y0;
    auto record = [&](const MacroState &s) {
        ControlSignal u = system.controls(s);
        traj.notes |= u.notes;
        traj.times.push_back(s.t);
        traj.states.push_back(s);
        traj.controls.push_back(std::move(u));
        traj.diagnostics.push_back(diagnose(s));
    };
    record(y);

    ControlSignal used;
    for (long step = 1; step <= steps; ++step) {
        const double t = y.t;
        const auto k1 = system.evaluate(y, &used);
        traj.notes |= used.notes;
        const auto k2 = system.evaluate(axpy(y, 0.5 * dt, k1, t + 0.5 * dt), &used);
        traj.notes |= used.notes;
        const auto k3 = system.evaluate(axpy(y, 0.5 * dt, k2, t + 0.5 * dt), &used);
        traj.notes |= used.notes;
        const auto k4 = system.evaluate(axpy(y, dt, k3, t + dt), &used);
        traj.notes |= used.notes;

        y.rho += (dt / 6.0) * (k1.rho + 2.0 * k2.rho + 2.0 * k3.rho + k4.rho);
        y.mom += (dt / 6.0) * (k1.mom + 2.0 * k2.mom + 2.0 * k3.mom + k4.mom);
        y.t = (step == steps) ? settings.t_end : static_cast<double>(step) * dt;
        sanitize(y);

        const double drift = std::abs(y.total_mass() - mass0);
        if (drift > mass_drift_limit) {
            std::ostringstream msg;
            msg << "mass drift " << drift << " at t = " << y.t << " exceeds " << mass_drift_limit;
            fail(ErrorCode::StepSizeTooLarge, msg.str());
        }
        if (step % settings.record_every == 0 || step == steps) record(y);
    }
    return traj;
}

std::string_view to_string(TailVerdict verdict) {
    switch (verdict) {
    case TailVerdict::ConvergedToZero: return "converged-to-zero";
    case TailVerdict::ConvergedToValue: return "converged-to-value";
    case TailVerdict::Growing: return "growing";
    case TailVerdict::Oscillating: return "oscillating";
    }
    return "unknown";
}

namespace {

TailVerdict classify(const std::vector<double> &t, const std::vector<double> &x, double tol) {
    const double peak = *std::max_element(x.begin(), x.end(), [](double a, double b) {
        return std::abs(a) < std::abs(b);
    });
    if (std::abs(peak) <= tol) return TailVerdict::ConvergedToZero;

    // sustained oscillation: repeated reversals whose amplitude is not dying out
    int sign_changes = 0;
    double prev = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double d = x[i] - x[i - 1];
        if (d != 0.0) {
            if (prev != 0.0 && (d > 0.0) != (prev > 0.0)) ++sign_changes;
            prev = d;
        }
    }
    if (sign_changes >= 3) {
        const std::size_t half = x.size() / 2;
        const auto [lo1, hi1] = std::minmax_element(x.begin(), x.begin() + half);
        const auto [lo2, hi2] = std::minmax_element(x.begin() + half, x.end());
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        const double late = *hi2 - *lo2;
        if (late / std::max(std::abs(mean), tol) > tol && late >= 0.5 * (*hi1 - *lo1))
            return TailVerdict::Oscillating;
    }

    const bool positive = std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
    if (positive) {
        // least-squares slope of log x against t
        double st = 0, sl = 0, stt = 0, stl = 0;
        const double k = static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double l = std::log(x[i]);
            st += t[i];
            sl += l;
            stt += t[i] * t[i];
            stl += t[i] * l;
        }
        const double denom = k * stt - st * st;
        const double slope = denom > 0.0 ? (k * stl - st * sl) / denom : 0.0;
        if (slope > tol) return TailVerdict::Growing;
        if (slope < -tol) return TailVerdict::ConvergedToZero;
    }
    return TailVerdict::ConvergedToValue;
}

} // namespace

std::vector<TailVerdict> convergence_report(const Trajectory &traj, double window, double tol) {
    if (traj.size() < 2 || !(window > 0.0))
        fail(ErrorCode::TrajectoryTooShort, "trajectory has no usable tail");
    const double t0 = traj.times.front();
    const double t1 = traj.times.back();
    if (t1 - t0 < 2.0 * window)
        fail(ErrorCode::TrajectoryTooShort, "trajectory must cover at least twice the window");

    std::size_t first = 0;
    while (first < traj.size() && traj.times[first] < t1 - window) ++first;
    if (traj.size() - first < 3)
        fail(ErrorCode::TrajectoryTooShort, "fewer than three samples in the window");

    const int n = traj.states.front().size();
    std::vector<TailVerdict> out(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> ts, xs;
        bool defined = true;
        for (std::size_t s = first; s < traj.size(); ++s) {
            const MacroState &st = traj.states[s];
            if (!(st.rho[i] >= default_mean_floor)) defined = false;
        }
        for (std::size_t s = first; s < traj.size(); ++s) {
            const MacroState &st = traj.states[s];
            ts.push_back(traj.times[s]);
            xs.push_back(defined ? st.mom[i] / st.rho[i] : st.mom[i]);
        }
        out[i] = classify(ts, xs, tol);
    }
    return out;
}

} // namespace netkin
