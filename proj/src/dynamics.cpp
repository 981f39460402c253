#include "bilat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bilat/errors.hpp"
#include "bilat/fft.hpp"
#include "bilat/units.hpp"

namespace bilat::dynamics {

using units::hbar;
using units::pi;

namespace {

using cd = std::complex<double>;

// Signed FFT bin frequency: k_j = 2*pi*j' / (n*dx) with j' the baseband alias.
double bin_wavenumber(int j, int n, double dx) {
    const int js = j <= n / 2 ? j : j - n;
    return 2.0 * pi * double(js) / (double(n) * dx);
}

void normalize(WavepacketState& s) {
    const double nrm = s.norm();
    if (!(nrm > 0.0))
        throw NumericError("dynamics: wavefunction norm vanished");
    const double inv = 1.0 / nrm;
    for (auto& a : s.amplitudes) a *= inv;
}

// <T> + <V(., t)>; accepts unnormalized amplitudes (divides by the norm).
double rayleigh_energy(const WavepacketState& s, const LatticePotential1D& pot, double t) {
    const int n = s.n();
    double pot_sum = 0.0;
    double den = 0.0;
    for (int j = 0; j < n; ++j) {
        const double p = std::norm(s.amplitudes[j]);
        pot_sum += p * pot.value(s.x0 + j * s.dx, t);
        den += p;
    }
    std::vector<cd> spec = s.amplitudes;
    fft::transform_1d(spec, -1);
    double kin_sum = 0.0;
    double kden = 0.0;
    for (int j = 0; j < n; ++j) {
        const double k = bin_wavenumber(j, n, s.dx);
        const double p = std::norm(spec[j]);
        kin_sum += p * hbar * hbar * k * k / (2.0 * s.mass);
        kden += p;
    }
    return pot_sum / den + kin_sum / kden;
}

double minimum_jerk_shape(double u) { return ((6.0 * u - 15.0) * u + 10.0) * u * u * u; }

struct TransportGrid {
    double x0 = 0.0;
    double dx = 0.0;
    int n = 0;
};

TransportGrid make_transport_grid(const LatticePotential1D& pot, double total_sites,
                                  const TransportOptions& opt) {
    if (opt.samples_per_site < 64)
        throw ValidationError("dynamics: transport needs >= 64 samples per site");
    if (opt.padding_sites < 8)
        throw ValidationError("dynamics: transport needs >= 8 padding sites");
    if (opt.steps_per_period < 2)
        throw ValidationError("dynamics: steps_per_period must be at least 2");
    const double a = pot.lattice_constant;
    const int span = 2 * (opt.padding_sites + int(std::ceil(std::abs(total_sites)))) + 1;
    TransportGrid g;
    g.n = span * opt.samples_per_site;
    g.dx = a / double(opt.samples_per_site);
    g.x0 = -0.5 * double(g.n) * g.dx;
    return g;
}

LatticePotential1D static_snapshot(const LatticePotential1D& pot, double t) {
    LatticePotential1D s;
    s.depth = pot.depth;
    s.lattice_constant = pot.lattice_constant;
    const double theta = pot.phase_trajectory ? pot.phase_trajectory(t) : 0.0;
    s.phase_trajectory = [theta](double) { return theta; };
    return s;
}

} // namespace

double LatticePotential1D::offset_at(double t) const {
    const double theta = phase_trajectory ? phase_trajectory(t) : 0.0;
    return lattice_constant * theta / (2.0 * pi);
}

double LatticePotential1D::value(double x, double t) const {
    const double s = std::sin(pi * (x - offset_at(t)) / lattice_constant);
    return depth * s * s;
}

void LatticePotential1D::validate() const {
    if (!(depth >= 0.0) || !std::isfinite(depth))
        throw ValidationError("dynamics: lattice depth must be finite and >= 0");
    if (!(lattice_constant > 0.0))
        throw ValidationError("dynamics: lattice constant must be positive");
}

double site_frequency(double depth, double lattice_constant, double mass) {
    if (!(depth > 0.0))
        throw ValidationError("dynamics: site frequency needs a positive depth");
    if (!(lattice_constant > 0.0) || !(mass > 0.0))
        throw ValidationError("dynamics: site frequency needs positive lattice constant and mass");
    return pi / lattice_constant * std::sqrt(2.0 * depth / mass);
}

double depth_for_site_frequency(double omega, double lattice_constant, double mass) {
    if (!(omega > 0.0) || !(lattice_constant > 0.0) || !(mass > 0.0))
        throw ValidationError("dynamics: depth_for_site_frequency needs positive arguments");
    const double v = omega * lattice_constant / pi;
    return 0.5 * mass * v * v;
}

double WavepacketState::norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return std::sqrt(s * dx);
}

void WavepacketState::validate() const {
    if (n() < 16)
        throw ValidationError("dynamics: wavepacket grid needs at least 16 samples");
    if (!(dx > 0.0))
        throw ValidationError("dynamics: wavepacket grid spacing must be positive");
    if (!(mass > 0.0))
        throw ValidationError("dynamics: wavepacket mass must be positive");
    if (std::abs(norm() - 1.0) > 1e-9)
        throw ValidationError("dynamics: wavepacket norm must be 1 within 1e-9");
}

WavepacketState ground_state(const LatticePotential1D& potential, double mass, double x0,
                             double dx, int n) {
    potential.validate();
    if (!(mass > 0.0))
        throw ValidationError("dynamics: ground state needs a positive mass");
    if (n < 16 || !(dx > 0.0))
        throw ValidationError("dynamics: ground state needs a valid grid");
    const double a = potential.lattice_constant;
    if (potential.depth > 0.0) {
        if (double(n) * dx < 3.0 * a - 1e-9 * a)
            throw ValidationError("dynamics: ground state grid must span at least 3 sites");
        if (a / dx < 64.0 - 1e-9)
            throw ValidationError("dynamics: ground state grid needs >= 64 samples per site");
    }

    WavepacketState s;
    s.x0 = x0;
    s.dx = dx;
    s.mass = mass;
    s.amplitudes.assign(size_t(n), cd(0.0, 0.0));

    const double span = double(n) * dx;
    const double center = x0 + 0.5 * span;
    double energy_scale;
    if (potential.depth > 0.0) {
        // Harmonic seed in the site minimum nearest the grid center.
        const double off = potential.offset_at(0.0);
        const double site = off + a * std::round((center - off) / a);
        const double omega = site_frequency(potential.depth, a, mass);
        const double var = hbar / (2.0 * mass * omega);
        for (int j = 0; j < n; ++j) {
            const double x = x0 + j * dx - site;
            s.amplitudes[j] = std::exp(-x * x / (4.0 * var));
        }
        energy_scale = std::max(potential.depth, hbar * omega);
    } else {
        // Flat seed: on a ring the zero-momentum wave is already the ground state.
        for (auto& amp : s.amplitudes) amp = 1.0;
        const double k1 = 2.0 * pi / span;
        energy_scale = hbar * hbar * k1 * k1 / (2.0 * mass);
    }
    normalize(s);

    // Imaginary-time Strang steps; the Trotter bias is polished away by
    // re-converging twice with a halved step.
    double tau = 0.25 * hbar / energy_scale;
    std::vector<double> pot_samples(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) pot_samples[size_t(j)] = potential.value(x0 + j * dx, 0.0);

    double energy = rayleigh_energy(s, potential, 0.0);
    const int max_iter = 200000;
    int iter = 0;
    for (int round = 0; round < 3; ++round, tau *= 0.5) {
        std::vector<double> half_pot(static_cast<size_t>(n)), kin(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            half_pot[size_t(j)] = std::exp(-0.5 * pot_samples[size_t(j)] * tau / hbar);
            const double k = bin_wavenumber(j, n, dx);
            kin[size_t(j)] = std::exp(-hbar * k * k * tau / (2.0 * mass));
        }
        double last = energy;
        int since_check = 0;
        bool settled = false;
        while (!settled) {
            if (++iter > max_iter)
                throw NumericError(
                    "dynamics: ground state iteration did not converge (energy residual " +
                    std::to_string(std::abs(energy - last)) + " J)");
            for (int j = 0; j < n; ++j) s.amplitudes[size_t(j)] *= half_pot[size_t(j)];
            fft::transform_1d(s.amplitudes, -1);
            for (int j = 0; j < n; ++j) s.amplitudes[size_t(j)] *= kin[size_t(j)];
            fft::transform_1d(s.amplitudes, +1);
            for (int j = 0; j < n; ++j) s.amplitudes[size_t(j)] *= half_pot[size_t(j)];
            normalize(s);
            if (++since_check >= 16) {
                since_check = 0;
                energy = rayleigh_energy(s, potential, 0.0);
                settled = std::abs(energy - last) <= 1e-12 * energy_scale;
                last = energy;
            }
        }
    }
    return s;
}

WavepacketState evolve(const WavepacketState& state, const LatticePotential1D& potential,
                       double dt, double duration, double t_start) {
    state.validate();
    potential.validate();
    if (!(dt > 0.0))
        throw ValidationError("dynamics: evolve needs a positive time step");
    if (duration < 0.0)
        throw ValidationError("dynamics: evolve needs a non-negative duration");
    if (duration == 0.0) return state;
    // Coarser steps wrap the local potential phase and alias the dynamics.
    if (potential.depth * dt / hbar > pi)
        throw NumericError("dynamics: time step too coarse for the potential depth");

    const int n = state.n();
    long steps = std::lround(duration / dt);
    if (steps < 1) steps = 1;
    const double h = duration / double(steps);

    std::vector<cd> kin(static_cast<size_t>(n));
    std::vector<char> near_nyquist(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double k = bin_wavenumber(j, n, state.dx);
        kin[size_t(j)] = std::polar(1.0, -hbar * k * k * h / (2.0 * state.mass));
        const int js = j <= n / 2 ? j : j - n;
        near_nyquist[size_t(j)] = std::abs(js) >= 0.95 * 0.5 * double(n) ? 1 : 0;
    }

    WavepacketState s = state;
    const double inv_n = 1.0 / double(n);
    auto half_potential = [&](double t) {
        for (int j = 0; j < n; ++j) {
            const double v = potential.value(s.x0 + j * s.dx, t);
            s.amplitudes[size_t(j)] *= std::polar(1.0, -0.5 * v * h / hbar);
        }
    };
    for (long step = 0; step < steps; ++step) {
        const double t0 = t_start + double(step) * h;
        half_potential(t0);
        fft::transform_1d(s.amplitudes, -1);
        double total = 0.0, tail = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p = std::norm(s.amplitudes[size_t(j)]);
            total += p;
            if (near_nyquist[size_t(j)]) tail += p;
            s.amplitudes[size_t(j)] *= kin[size_t(j)];
        }
        // Spectral weight piling up at the band edge means the dynamics are
        // folding back into the grid instead of being resolved by it.
        if (tail > 1e-3 * total)
            throw NumericError(
                "dynamics: wavepacket momentum reached the grid Nyquist limit; "
                "refine the spatial grid");
        fft::transform_1d(s.amplitudes, +1);
        for (int j = 0; j < n; ++j) s.amplitudes[size_t(j)] *= inv_n;
        half_potential(t0 + h);
    }
    return s;
}

double overlap_fidelity(const WavepacketState& a, const WavepacketState& b) {
    if (a.n() != b.n() || std::abs(a.dx - b.dx) > 1e-15 * a.dx)
        throw ValidationError("dynamics: overlap needs states on the same grid");
    cd acc(0.0, 0.0);
    for (int j = 0; j < a.n(); ++j)
        acc += std::conj(a.amplitudes[size_t(j)]) * b.amplitudes[size_t(j)];
    return std::norm(acc * a.dx);
}

WavepacketState translated(const WavepacketState& state, double shift) {
    state.validate();
    WavepacketState s = state;
    fft::transform_1d(s.amplitudes, -1);
    const int n = s.n();
    for (int j = 0; j < n; ++j) {
        const double k = bin_wavenumber(j, n, s.dx);
        s.amplitudes[size_t(j)] *= std::polar(1.0 / double(n), -k * shift);
    }
    fft::transform_1d(s.amplitudes, +1);
    return s;
}

double position_mean(const WavepacketState& state) {
    double acc = 0.0, den = 0.0;
    for (int j = 0; j < state.n(); ++j) {
        const double p = std::norm(state.amplitudes[size_t(j)]);
        acc += p * (state.x0 + j * state.dx);
        den += p;
    }
    return acc / den;
}

double position_variance(const WavepacketState& state) {
    const double mu = position_mean(state);
    double acc = 0.0, den = 0.0;
    for (int j = 0; j < state.n(); ++j) {
        const double p = std::norm(state.amplitudes[size_t(j)]);
        const double d = state.x0 + j * state.dx - mu;
        acc += p * d * d;
        den += p;
    }
    return acc / den;
}

double total_energy(const WavepacketState& state, const LatticePotential1D& potential, double t) {
    state.validate();
    potential.validate();
    return rayleigh_energy(state, potential, t);
}

void TransportProtocol::validate() const {
    if (!std::isfinite(distance))
        throw ValidationError("dynamics: transport distance must be finite");
    if (!(duration >= 0.0) || !std::isfinite(duration))
        throw ValidationError("dynamics: transport duration must be finite and >= 0");
    if (mode == TransportMode::sudden_jump && duration != 0.0)
        throw ValidationError("dynamics: a sudden jump has zero duration");
    if (mode == TransportMode::smooth_ramp && !(duration > 0.0))
        throw ValidationError("dynamics: a smooth ramp needs a positive duration");
}

namespace {

FidelityResult run_stages(const std::vector<TransportProtocol>& stages,
                          const LatticePotential1D& potential, double mass,
                          const TransportOptions& opt) {
    potential.validate();
    if (!(potential.depth > 0.0))
        throw ValidationError("dynamics: transport needs a positive lattice depth");
    if (stages.empty())
        throw ValidationError("dynamics: transport needs at least one stage");
    double total_sites = 0.0;
    double total_time = 0.0;
    for (const auto& st : stages) {
        st.validate();
        if (st.mode == TransportMode::composite)
            throw ValidationError("dynamics: composite protocols are given as explicit stage lists");
        total_sites += st.distance;
        total_time += st.duration;
    }
    double reach = 0.0, run = 0.0;
    for (const auto& st : stages) {
        run += st.distance;
        reach = std::max(reach, std::abs(run));
    }

    const double a = potential.lattice_constant;
    const double omega = site_frequency(potential.depth, a, mass);
    const TransportGrid grid = make_transport_grid(potential, reach, opt);
    const double dt = 2.0 * pi / omega / double(opt.steps_per_period);

    const double x_start = potential.offset_at(0.0) + a * std::round(-potential.offset_at(0.0) / a);
    const LatticePotential1D initial = static_snapshot(potential, 0.0);
    const WavepacketState psi0 = ground_state(initial, mass, grid.x0, grid.dx, grid.n);
    const double ground_energy = rayleigh_energy(psi0, initial, 0.0);

    FidelityResult result;
    const double theta0 = potential.phase_trajectory ? potential.phase_trajectory(0.0) : 0.0;
    WavepacketState psi = psi0;
    double moved = 0.0;  // sites already travelled
    double t_global = 0.0;
    for (const auto& st : stages) {
        if (st.mode == TransportMode::sudden_jump) {
            moved += st.distance;
            continue;
        }
        LatticePotential1D moving;
        moving.depth = potential.depth;
        moving.lattice_constant = a;
        const double base = moved;
        const double d = st.distance;
        const double T = st.duration;
        const auto shape = st.ramp_shape;
        const double t_begin = t_global;
        moving.phase_trajectory = [=](double t) {
            double u = (t - t_begin) / T;
            u = std::clamp(u, 0.0, 1.0);
            const double s = shape == RampShape::minimum_jerk ? minimum_jerk_shape(u) : u;
            return theta0 + 2.0 * pi * (base + d * s);
        };
        long steps = std::lround(T / dt);
        if (steps < 1) steps = 1;
        const double h = T / double(steps);
        if (opt.trace_stride > 0) {
            long done = 0;
            while (done < steps) {
                const long chunk = std::min<long>(opt.trace_stride, steps - done);
                psi = evolve(psi, moving, h, double(chunk) * h, t_global);
                done += chunk;
                t_global = t_begin + double(done) * h;
                const double off = moving.offset_at(t_global) - theta0 * a / (2.0 * pi);
                const WavepacketState follow = translated(psi0, off);
                result.trace_times.push_back(t_global);
                result.trace_fidelities.push_back(overlap_fidelity(follow, psi));
                result.trace_energies.push_back(rayleigh_energy(psi, moving, t_global));
            }
        } else {
            psi = evolve(psi, moving, h, T, t_global);
            t_global += T;
        }
        moved += d;
    }

    // Target: ground state of the site of the final potential nearest the
    // wavepacket. The final lattice is the initial one translated by the total
    // distance, so that state is an exact translate of psi0.
    const double x_final_off = x_start + total_sites * a;
    const double x_mean = position_mean(psi);
    const double x_target = x_final_off + a * std::round((x_mean - x_final_off) / a);
    const WavepacketState target = translated(psi0, x_target - x_start);

    LatticePotential1D final_pot;
    final_pot.depth = potential.depth;
    final_pot.lattice_constant = a;
    final_pot.phase_trajectory = [theta0, total_sites](double) {
        return theta0 + 2.0 * pi * total_sites;
    };

    result.fidelity = overlap_fidelity(target, psi);
    result.excitation_energy = rayleigh_energy(psi, final_pot, t_global) - ground_energy;
    if (stages.size() == 1) {
        result.protocol = stages.front();
    } else {
        result.protocol.mode = TransportMode::composite;
        result.protocol.distance = total_sites;
        result.protocol.duration = total_time;
        result.protocol.ramp_shape = stages.front().ramp_shape;
    }
    return result;
}

} // namespace

FidelityResult transport_fidelity(const TransportProtocol& protocol,
                                  const LatticePotential1D& potential, double mass,
                                  const TransportOptions& options) {
    protocol.validate();
    if (protocol.mode == TransportMode::composite)
        throw ValidationError("dynamics: composite protocols are given as explicit stage lists");
    return run_stages({protocol}, potential, mass, options);
}

FidelityResult transport_fidelity(const std::vector<TransportProtocol>& stages,
                                  const LatticePotential1D& potential, double mass,
                                  const TransportOptions& options) {
    return run_stages(stages, potential, mass, options);
}

double jitter_overlap_fidelity(double sigma_jitter, double wavepacket_width) {
    if (!(wavepacket_width > 0.0))
        throw ValidationError("dynamics: jitter fidelity needs a positive wavepacket width");
    if (sigma_jitter < 0.0)
        throw ValidationError("dynamics: jitter sigma must be >= 0");
    const double r = sigma_jitter / wavepacket_width;
    return 1.0 / std::sqrt(1.0 + 0.5 * r * r);
}

void write_fidelity_trace_csv(std::ostream& out, const FidelityResult& result) {
    if (result.trace_times.empty())
        throw ValidationError("dynamics: no trace recorded (set trace_stride > 0)");
    out << "t_s,fidelity,energy_J\n";
    out.precision(12);
    for (size_t i = 0; i < result.trace_times.size(); ++i)
        out << result.trace_times[i] << ',' << result.trace_fidelities[i] << ','
            << result.trace_energies[i] << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<std::array<double, 2>>& rows) {
    out << "param,fidelity\n";
    out.precision(12);
    for (const auto& r : rows) out << r[0] << ',' << r[1] << '\n';
}

} // namespace bilat::dynamics
