#include "swarmcomp/particle_lab.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "swarmcomp/rng.hpp"
#include "swarmcomp/score.hpp"

namespace fs = std::filesystem;

namespace sc {
namespace {

constexpr double kForceCap = 1e4;
constexpr double kOverlapDist = 1e-6;

double min_image(double d, double box) {
    d -= box * std::round(d / box);
    return d;
}

double wrap(double v, double box) {
    v = std::fmod(v, box);
    if (v < 0) v += box;
    return v;
}

void build_cells(ParticleSystem& sys, double r_c) {
    sys.cell_ncell = std::max(1, static_cast<int>(std::floor(sys.box / r_c)));
    sys.cell_size = sys.box / sys.cell_ncell;
    sys.cell_bins.assign(static_cast<std::size_t>(sys.cell_ncell) * sys.cell_ncell, {});
    for (int i = 0; i < sys.n; ++i) {
        int cx = std::min(sys.cell_ncell - 1,
                          static_cast<int>(sys.x[static_cast<std::size_t>(i)] / sys.cell_size));
        int cy = std::min(sys.cell_ncell - 1,
                          static_cast<int>(sys.y[static_cast<std::size_t>(i)] / sys.cell_size));
        sys.cell_bins[static_cast<std::size_t>(cy) * sys.cell_ncell + cx].push_back(i);
    }
    sys.cells_built_at = sys.step_count;
}

template <typename Fn>
void for_cell_neighbors(const ParticleSystem& sys, int i, Fn&& fn) {
    int nc = sys.cell_ncell;
    int cx = std::min(nc - 1, static_cast<int>(sys.x[static_cast<std::size_t>(i)] / sys.cell_size));
    int cy = std::min(nc - 1, static_cast<int>(sys.y[static_cast<std::size_t>(i)] / sys.cell_size));
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            int nx = ((cx + dx) % nc + nc) % nc;
            int ny = ((cy + dy) % nc + nc) % nc;
            for (int j : sys.cell_bins[static_cast<std::size_t>(ny) * nc + nx])
                if (j != i) fn(j);
        }
    }
}

}  // namespace

InteractionRule InteractionRule::lj() {
    InteractionRule r;
    r.kind = Kind::LJ;
    r.r_c = 2.5;
    return r;
}

InteractionRule InteractionRule::morse() {
    InteractionRule r;
    r.kind = Kind::Morse;
    r.r_c = 3.0;
    return r;
}

InteractionRule InteractionRule::salr() {
    InteractionRule r;
    r.kind = Kind::SALR;
    r.r_c = 4.0;
    return r;
}

InteractionRule InteractionRule::vicsek() {
    InteractionRule r;
    r.kind = Kind::Vicsek;
    r.r_c = 1.0;  // = r_v
    return r;
}

InteractionRule InteractionRule::by_name(const std::string& name) {
    if (name == "lj") return lj();
    if (name == "morse") return morse();
    if (name == "salr") return salr();
    if (name == "vicsek") return vicsek();
    throw std::invalid_argument("unknown interaction rule: " + name);
}

std::string InteractionRule::name() const {
    switch (kind) {
        case Kind::LJ: return "lj";
        case Kind::Morse: return "morse";
        case Kind::SALR: return "salr";
        case Kind::Vicsek: return "vicsek";
    }
    return "lj";
}

ParticleSystem init_system(int n, double rho, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("init_system: n must be >= 2");
    ParticleSystem sys;
    sys.n = n;
    sys.rho = rho;
    sys.box = std::sqrt(static_cast<double>(n) / rho);
    sys.rng = make_rng(seed, "particles");
    auto init_rng = make_rng(seed, "particles-init");
    std::uniform_real_distribution<double> pos(0.0, sys.box);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    sys.x.resize(static_cast<std::size_t>(n));
    sys.y.resize(static_cast<std::size_t>(n));
    sys.theta.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        sys.x[static_cast<std::size_t>(i)] = wrap(pos(init_rng), sys.box);
        sys.y[static_cast<std::size_t>(i)] = wrap(pos(init_rng), sys.box);
        sys.theta[static_cast<std::size_t>(i)] = angle(init_rng);
    }
    return sys;
}

double pair_potential(const InteractionRule& rule, double r) {
    if (r >= rule.r_c) return 0.0;
    switch (rule.kind) {
        case InteractionRule::Kind::LJ: {
            double sr6 = std::pow(rule.sigma / r, 6);
            return 4.0 * rule.epsilon * (sr6 * sr6 - sr6);
        }
        case InteractionRule::Kind::Morse: {
            double e = std::exp(-rule.alpha * (r - rule.r_e));
            return rule.d_e * (1.0 - e) * (1.0 - e) - rule.d_e;
        }
        case InteractionRule::Kind::SALR: {
            double ra = r / rule.sigma_a, rr = r / rule.sigma_r;
            return -rule.a * std::exp(-ra * ra) + rule.b * std::exp(-rr * rr);
        }
        case InteractionRule::Kind::Vicsek:
            return 0.0;
    }
    return 0.0;
}

double pair_force(const InteractionRule& rule, double r) {
    if (r >= rule.r_c) return 0.0;
    double f = 0.0;
    switch (rule.kind) {
        case InteractionRule::Kind::LJ: {
            double sr6 = std::pow(rule.sigma / r, 6);
            // -dU/dr = 4e (12 s^12/r^13 - 6 s^6/r^7)
            f = 4.0 * rule.epsilon * (12.0 * sr6 * sr6 - 6.0 * sr6) / r;
            break;
        }
        case InteractionRule::Kind::Morse: {
            double e = std::exp(-rule.alpha * (r - rule.r_e));
            // dU/dr = 2 De a e (1 - e); force = -dU/dr
            f = -2.0 * rule.d_e * rule.alpha * e * (1.0 - e);
            break;
        }
        case InteractionRule::Kind::SALR: {
            double ra = r / rule.sigma_a, rr = r / rule.sigma_r;
            // dU/dr = 2Ar/sa^2 e^{-(r/sa)^2} - 2Br/sr^2 e^{-(r/sr)^2}
            double du = 2.0 * rule.a * r / (rule.sigma_a * rule.sigma_a) * std::exp(-ra * ra) -
                        2.0 * rule.b * r / (rule.sigma_r * rule.sigma_r) * std::exp(-rr * rr);
            f = -du;
            break;
        }
        case InteractionRule::Kind::Vicsek:
            return 0.0;
    }
    return std::clamp(f, -kForceCap, kForceCap);
}

void compute_forces(ParticleSystem& sys, const InteractionRule& rule, std::vector<double>& fx,
                    std::vector<double>& fy, bool use_cells) {
    fx.assign(static_cast<std::size_t>(sys.n), 0.0);
    fy.assign(static_cast<std::size_t>(sys.n), 0.0);

    auto add_pair = [&](int i, int j) {
        double dx = min_image(sys.x[static_cast<std::size_t>(i)] - sys.x[static_cast<std::size_t>(j)], sys.box);
        double dy = min_image(sys.y[static_cast<std::size_t>(i)] - sys.y[static_cast<std::size_t>(j)], sys.box);
        double r2 = dx * dx + dy * dy;
        if (r2 >= rule.r_c * rule.r_c) return;
        double r = std::sqrt(r2);
        double f;
        if (r < kOverlapDist) {
            f = kForceCap;  // overlap guard: push apart along an arbitrary axis
            ++sys.overlap_events;
            dx = 1.0;
            dy = 0.0;
            r = 1.0;
        } else {
            f = pair_force(rule, r);
        }
        fx[static_cast<std::size_t>(i)] += f * dx / r;
        fy[static_cast<std::size_t>(i)] += f * dy / r;
    };

    // cells narrower than r_c would miss pairs; fall back to O(N^2)
    bool cells_valid = use_cells && sys.box >= 3.0 * rule.r_c;
    if (cells_valid) {
        if (sys.cells_built_at < 0 || sys.step_count - sys.cells_built_at >= 10 ||
            sys.step_count < sys.cells_built_at)
            build_cells(sys, rule.r_c);
        for (int i = 0; i < sys.n; ++i)
            for_cell_neighbors(sys, i, [&](int j) { add_pair(i, j); });
    } else {
        for (int i = 0; i < sys.n; ++i)
            for (int j = 0; j < sys.n; ++j)
                if (j != i) add_pair(i, j);
    }
}

void step_langevin(ParticleSystem& sys, const InteractionRule& rule, double temp, double dt,
                   double mu) {
    if (rule.kind == InteractionRule::Kind::Vicsek)
        throw std::invalid_argument("step_langevin: use step_vicsek for the Vicsek rule");
    std::vector<double> fx, fy;
    compute_forces(sys, rule, fx, fy, true);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double noise = std::sqrt(2.0 * temp * dt);
    for (int i = 0; i < sys.n; ++i) {
        double nx = gauss(sys.rng), ny = gauss(sys.rng);
        sys.x[static_cast<std::size_t>(i)] =
            wrap(sys.x[static_cast<std::size_t>(i)] + mu * fx[static_cast<std::size_t>(i)] * dt + noise * nx, sys.box);
        sys.y[static_cast<std::size_t>(i)] =
            wrap(sys.y[static_cast<std::size_t>(i)] + mu * fy[static_cast<std::size_t>(i)] * dt + noise * ny, sys.box);
    }
    ++sys.step_count;
}

void step_vicsek(ParticleSystem& sys, const InteractionRule& rule, double dt) {
    if (rule.kind != InteractionRule::Kind::Vicsek)
        throw std::invalid_argument("step_vicsek: rule must be Vicsek");
    std::vector<double> new_theta(static_cast<std::size_t>(sys.n));
    std::uniform_real_distribution<double> noise(-rule.eta / 2.0, rule.eta / 2.0);
    double rv2 = rule.r_v * rule.r_v;
    for (int i = 0; i < sys.n; ++i) {
        double sx = 0.0, sy = 0.0;
        for (int j = 0; j < sys.n; ++j) {  // self included
            double dx = min_image(sys.x[static_cast<std::size_t>(i)] - sys.x[static_cast<std::size_t>(j)], sys.box);
            double dy = min_image(sys.y[static_cast<std::size_t>(i)] - sys.y[static_cast<std::size_t>(j)], sys.box);
            if (dx * dx + dy * dy <= rv2) {
                sx += std::cos(sys.theta[static_cast<std::size_t>(j)]);
                sy += std::sin(sys.theta[static_cast<std::size_t>(j)]);
            }
        }
        new_theta[static_cast<std::size_t>(i)] = std::atan2(sy, sx) + noise(sys.rng);
    }
    sys.theta = std::move(new_theta);
    for (int i = 0; i < sys.n; ++i) {
        sys.x[static_cast<std::size_t>(i)] = wrap(
            sys.x[static_cast<std::size_t>(i)] + rule.v0 * std::cos(sys.theta[static_cast<std::size_t>(i)]) * dt, sys.box);
        sys.y[static_cast<std::size_t>(i)] = wrap(
            sys.y[static_cast<std::size_t>(i)] + rule.v0 * std::sin(sys.theta[static_cast<std::size_t>(i)]) * dt, sys.box);
    }
    ++sys.step_count;
}

double temperature(int t, const AnnealSchedule& schedule) {
    if (schedule.steps < 2) return schedule.t_min;
    double frac = 1.0 - static_cast<double>(t) / (schedule.steps - 1);
    frac = std::max(0.0, frac);
    return schedule.t_min + (schedule.t0 - schedule.t_min) * std::pow(frac, schedule.p);
}

std::vector<std::pair<double, double>> radial_distribution(const ParticleSystem& sys, double dr,
                                                           double r_max) {
    if (sys.n < 2) throw std::invalid_argument("radial_distribution: n must be >= 2");
    if (r_max <= 0.0) r_max = sys.box / 2.0;
    int bins = static_cast<int>(std::floor(r_max / dr));
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    for (int i = 0; i < sys.n; ++i) {
        for (int j = i + 1; j < sys.n; ++j) {
            double dx = min_image(sys.x[static_cast<std::size_t>(i)] - sys.x[static_cast<std::size_t>(j)], sys.box);
            double dy = min_image(sys.y[static_cast<std::size_t>(i)] - sys.y[static_cast<std::size_t>(j)], sys.box);
            double r = std::sqrt(dx * dx + dy * dy);
            int bin = static_cast<int>(r / dr);
            if (bin >= 0 && bin < bins) hist[static_cast<std::size_t>(bin)] += 2.0;  // both orderings
        }
    }
    std::vector<std::pair<double, double>> out;
    for (int b = 0; b < bins; ++b) {
        double r = (b + 0.5) * dr;
        double g = hist[static_cast<std::size_t>(b)] /
                   (static_cast<double>(sys.n) * 2.0 * M_PI * r * dr * sys.rho);
        out.emplace_back(r, g);
    }
    return out;
}

std::vector<double> hexatic_order(const ParticleSystem& sys, double r_nb) {
    std::vector<double> out(static_cast<std::size_t>(sys.n), 0.0);
    double r2 = r_nb * r_nb;
    for (int i = 0; i < sys.n; ++i) {
        std::complex<double> acc{0.0, 0.0};
        int count = 0;
        for (int j = 0; j < sys.n; ++j) {
            if (j == i) continue;
            double dx = min_image(sys.x[static_cast<std::size_t>(j)] - sys.x[static_cast<std::size_t>(i)], sys.box);
            double dy = min_image(sys.y[static_cast<std::size_t>(j)] - sys.y[static_cast<std::size_t>(i)], sys.box);
            if (dx * dx + dy * dy > r2) continue;
            double angle = std::atan2(dy, dx);  // measured from the +x axis
            acc += std::exp(std::complex<double>(0.0, 6.0 * angle));
            ++count;
        }
        if (count > 0) out[static_cast<std::size_t>(i)] = std::min(1.0, std::abs(acc) / count);
    }
    return out;
}

std::vector<double> local_density(const ParticleSystem& sys, double r) {
    std::vector<double> counts(static_cast<std::size_t>(sys.n), 0.0);
    double r2 = r * r;
    for (int i = 0; i < sys.n; ++i) {
        for (int j = i + 1; j < sys.n; ++j) {
            double dx = min_image(sys.x[static_cast<std::size_t>(i)] - sys.x[static_cast<std::size_t>(j)], sys.box);
            double dy = min_image(sys.y[static_cast<std::size_t>(i)] - sys.y[static_cast<std::size_t>(j)], sys.box);
            if (dx * dx + dy * dy <= r2) {
                counts[static_cast<std::size_t>(i)] += 1.0;
                counts[static_cast<std::size_t>(j)] += 1.0;
            }
        }
    }
    double max_count = *std::max_element(counts.begin(), counts.end());
    if (max_count > 0.0)
        for (double& c : counts) c /= max_count;
    return counts;
}

double mean_potential_energy(ParticleSystem& sys, const InteractionRule& rule) {
    double u = 0.0;
    for (int i = 0; i < sys.n; ++i) {
        for (int j = i + 1; j < sys.n; ++j) {
            double dx = min_image(sys.x[static_cast<std::size_t>(i)] - sys.x[static_cast<std::size_t>(j)], sys.box);
            double dy = min_image(sys.y[static_cast<std::size_t>(i)] - sys.y[static_cast<std::size_t>(j)], sys.box);
            double r = std::sqrt(dx * dx + dy * dy);
            if (r < rule.r_c && r > kOverlapDist) u += pair_potential(rule, r);
        }
    }
    return u / sys.n;
}

double polar_order(const ParticleSystem& sys) {
    double sx = 0.0, sy = 0.0;
    for (double t : sys.theta) {
        sx += std::cos(t);
        sy += std::sin(t);
    }
    return std::sqrt(sx * sx + sy * sy) / sys.n;
}

json run_experiment(const InteractionRule& rule, const AnnealSchedule& schedule,
                    std::uint64_t seed, const std::string& out_dir, int stride, int n,
                    double rho) {
    ParticleSystem sys = init_system(n, rho, seed);
    bool vicsek = rule.kind == InteractionRule::Kind::Vicsek;

    std::string series = "step,temperature,energy,order\n";
    auto record = [&](int t) {
        double temp = vicsek ? 0.0 : temperature(t, schedule);
        double energy = vicsek ? 0.0 : mean_potential_energy(sys, rule);
        double order;
        if (vicsek) {
            order = polar_order(sys);
        } else if (rule.kind == InteractionRule::Kind::SALR) {
            auto dens = local_density(sys);
            order = std::accumulate(dens.begin(), dens.end(), 0.0) / sys.n;
        } else {
            auto psi = hexatic_order(sys);
            order = std::accumulate(psi.begin(), psi.end(), 0.0) / sys.n;
        }
        char line[160];
        std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g\n", t, temp, energy, order);
        series += line;
        if (!std::isfinite(energy)) throw std::runtime_error("non-finite energy at step " + std::to_string(t));
    };

    for (int t = 0; t < schedule.steps; ++t) {
        if (t % stride == 0) record(t);
        if (vicsek)
            step_vicsek(sys, rule);
        else
            step_langevin(sys, rule, temperature(t, schedule));
    }
    record(schedule.steps);

    auto gr = radial_distribution(sys);
    std::vector<double> order_field;
    if (vicsek) {
        for (double t : sys.theta) order_field.push_back(wrap(t, 2.0 * M_PI) / (2.0 * M_PI));
    } else if (rule.kind == InteractionRule::Kind::SALR) {
        order_field = local_density(sys);
    } else {
        order_field = hexatic_order(sys);
    }

    json params = {{"rule", rule.name()},
                   {"n", sys.n},
                   {"rho", sys.rho},
                   {"box", sys.box},
                   {"seed", seed},
                   {"steps", schedule.steps},
                   {"t0", schedule.t0},
                   {"t_min", schedule.t_min},
                   {"p", schedule.p},
                   {"r_c", rule.r_c},
                   {"overlap_events", sys.overlap_events}};

    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
        std::string config = "x,y,order\n";
        for (int i = 0; i < sys.n; ++i) {
            char line[120];
            std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g\n", sys.x[static_cast<std::size_t>(i)],
                          sys.y[static_cast<std::size_t>(i)], order_field[static_cast<std::size_t>(i)]);
            config += line;
        }
        write_file((fs::path(out_dir) / "config.csv").string(), config);
        std::string grcsv = "r,g\n";
        for (auto& [r, g] : gr) {
            char line[80];
            std::snprintf(line, sizeof(line), "%.10g,%.10g\n", r, g);
            grcsv += line;
        }
        write_file((fs::path(out_dir) / "gr.csv").string(), grcsv);
        write_file((fs::path(out_dir) / "series.csv").string(), series);
        write_file((fs::path(out_dir) / "params.json").string(), params.dump(2) + "\n");
    }

    double mean_order =
        std::accumulate(order_field.begin(), order_field.end(), 0.0) / sys.n;
    json summary = params;
    summary["mean_order"] = mean_order;
    summary["g_r_bins"] = gr.size();
    return summary;
}

}  // namespace sc
