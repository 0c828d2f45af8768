#include "crepe/harness/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "crepe/random.hpp"

namespace crepe::harness {

namespace {

UcmCamera random_camera(Rng& rng) {
    const int width = 64;
    const int height = 48;
    const double f = rng.uniform(30.0, 90.0);
    return UcmCamera(f, f * rng.uniform(0.9, 1.1), width / 2.0 + rng.uniform(-2.0, 2.0),
                     height / 2.0 + rng.uniform(-2.0, 2.0), rng.uniform(0.0, 1.0), width, height);
}

RigidTransform random_pose(Rng& rng) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = rng.uniform(0.0, 0.35);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    const Eigen::Vector3d t(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    return RigidTransform(r, t);
}

constexpr double kFrequencies[] = {1.0, 0.1, 0.01, 0.001};

}  // namespace

OracleCoordinate oracle_coordinate(const UcmCamera& cam_q, const Eigen::Vector3d& point_q) {
    OracleCoordinate out;
    const double n = point_q.norm();
    out.range = n;
    const double denom = point_q.z() + cam_q.xi() * n;
    out.valid = n > 0.0 && std::abs(denom) >= kBetaGuard && (cam_q.xi() > 0.0 || point_q.z() > 0.0);
    if (n == 0.0) {
        return out;
    }
    const Eigen::Vector2d px = ucm_project(cam_q, point_q);
    const double ub = (px.x() - cam_q.cx()) / cam_q.width();
    const double vb = (px.y() - cam_q.cy()) / cam_q.height();
    const double norm = std::sqrt(ub * ub + vb * vb + 1.0);
    out.u = ub / norm;
    out.v = vb / norm;
    return out;
}

PhasorProblem random_phasor_problem(std::uint64_t seed, bool sigma_zero) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(mix_seed(seed, attempt));
        const UcmCamera cam_s = random_camera(rng);
        const UcmCamera cam_q = random_camera(rng);
        const RigidTransform pose = random_pose(rng);
        const Eigen::Vector2d pixel(rng.uniform(0.0, cam_s.width()), rng.uniform(0.0, cam_s.height()));
        const double mu = rng.uniform(-1.5, 1.5);
        const double cap = std::min(kLogRadialBound - std::abs(mu), 2.0);
        const double sigma = sigma_zero ? 0.0 : rng.uniform(0.05, 1.0) * cap;
        const int coordinate = static_cast<int>(rng.next_u64() % 3);
        const double frequency = kFrequencies[rng.next_u64() % 4];
        PhasorProblem p{cam_s, cam_q, pose, pixel, clamp_interval(mu, sigma), coordinate, frequency};

        // Reject problems whose interval leaves the valid projection domain anywhere on a fine grid.
        const Ray ray = ucm_unproject(cam_s, pixel);
        const double a = p.interval.half_width();
        bool ok = true;
        for (int i = 0; i <= 256 && ok; ++i) {
            const double z = p.interval.mu - a + 2.0 * a * i / 256.0;
            const Eigen::Vector3d x = pose.apply(std::exp(z) * ray.direction());
            const double beta = x.z() + cam_q.xi() * x.norm();
            ok = oracle_coordinate(cam_q, x).valid && beta > 1e-3;
        }
        if (ok) {
            return p;
        }
    }
}

Phasor library_phasor(const PhasorProblem& problem, int num_breakpoints) {
    const Ray ray = ucm_unproject(problem.cam_s, problem.pixel);
    const auto radii = breakpoints(problem.interval, num_breakpoints);
    const ProjectedPath path = projected_path(problem.cam_q, problem.source_to_query, ray, radii);
    std::vector<double> phases;
    phases.reserve(path.points.size());
    for (const auto& pt : path.points) {
        phases.push_back(problem.frequency * pt.coordinate(problem.coordinate));
    }
    return expected_phasor(phases);
}

MonteCarloResult monte_carlo_phasor(const PhasorProblem& problem, long samples, std::uint64_t seed) {
    const Ray ray = ucm_unproject(problem.cam_s, problem.pixel);
    const double a = problem.interval.half_width();
    const double lo = problem.interval.mu - a;
    Rng rng(seed);
    MonteCarloResult out;
    double c = 0.0;
    double s = 0.0;
    for (long i = 0; i < samples; ++i) {
        const double z = lo + 2.0 * a * rng.uniform();
        const Eigen::Vector3d x = problem.source_to_query.apply(std::exp(z) * ray.direction());
        const OracleCoordinate q = oracle_coordinate(problem.cam_q, x);
        out.all_valid = out.all_valid && q.valid;
        const double coord = problem.coordinate == 0 ? q.u : (problem.coordinate == 1 ? q.v : q.range);
        const double theta = problem.frequency * coord;
        c += std::cos(theta);
        s += std::sin(theta);
    }
    out.mean = {c / static_cast<double>(samples), s / static_cast<double>(samples)};
    return out;
}

double component_error(const Phasor& a, const Phasor& b) { return std::max(std::abs(a.c - b.c), std::abs(a.s - b.s)); }

}  // namespace crepe::harness
