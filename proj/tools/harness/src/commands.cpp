#include "crepe/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "crepe/errors.hpp"
#include "crepe/geometry_head.hpp"
#include "crepe/harness/gradcheck.hpp"
#include "crepe/harness/oracle.hpp"
#include "crepe/harness/probe.hpp"
#include "crepe/random.hpp"

namespace crepe::harness {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Trajectory load_trajectory(const RunConfig& config) {
    if (config.trajectory_path) {
        return read_trajectory(*config.trajectory_path);
    }
    return Trajectory{config.trajectory_spec.camera, make_trajectory(config.trajectory_spec)};
}

namespace {

struct TokenGrid {
    int rows;
    int cols;
    int tokens() const { return rows * cols; }
};

TokenGrid token_grid(const UcmCamera& cam, int patch_size) {
    if (cam.width() % patch_size != 0 || cam.height() % patch_size != 0) {
        throw ValidationError("image " + std::to_string(cam.width()) + "x" + std::to_string(cam.height()) +
                              " is not divisible by patch size " + std::to_string(patch_size));
    }
    return {cam.height() / patch_size, cam.width() / patch_size};
}

void write_json(const RunConfig& config, const std::string& name, json j) {
    j["config_hash"] = config.hash();
    write_text(config.out_dir / name, j.dump(2) + "\n");
}

std::string csv_preamble(const RunConfig& config) { return "# config_hash=" + config.hash() + "\n"; }

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads; results are index-addressed
// so output does not depend on scheduling.
template <typename Fn>
void parallel_for(int n, Fn fn) {
    const int workers = std::max(1, std::min<int>(static_cast<int>(std::thread::hardware_concurrency()), n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

std::vector<RadialInterval> token_intervals(const RunConfig& config, const Trajectory& trajectory) {
    const TokenGrid grid = token_grid(trajectory.camera, config.patch_size);
    const std::size_t n = trajectory.poses.size() * static_cast<std::size_t>(grid.tokens());
    if (config.interval_override) {
        return std::vector<RadialInterval>(n, *config.interval_override);
    }
    const HeadParams head = head_init(16, config.seed);
    const RadialInterval init = head_forward(head, Eigen::VectorXd::Zero(16));
    std::vector<RadialInterval> pred(n, init);
    if (!config.rdm1_path) {
        return pred;
    }
    const RadialMap map = read_rdm1(*config.rdm1_path);
    if (map.frames != static_cast<int>(trajectory.poses.size()) || map.width != trajectory.camera.width() ||
        map.height != trajectory.camera.height()) {
        throw ValidationError("RDM1 dimensions do not match the trajectory camera and frame count");
    }
    double near = 0.0;
    const auto sidecar = read_rdm1_sidecar(*config.rdm1_path);
    if (sidecar && sidecar->near_stat) {
        near = *sidecar->near_stat;
    } else {
        near = near_distance_stat(map, validity_mask(map, config.r_max));
    }
    return external_override(pred, map, near, config.r_max, config.patch_size, config.interval_sigma);
}

CommandResult cmd_coeffs(const RunConfig& config) {
    const Trajectory traj = load_trajectory(config);
    const TokenGrid grid = token_grid(traj.camera, config.patch_size);
    const FrequencyPlan plan = make_crepe_plan(config.dim_per_coordinate, kRaysPerPatch, config.rope_base);
    const auto intervals = token_intervals(config, traj);
    const auto frames = static_cast<std::uint32_t>(traj.poses.size());

    std::vector<PatchRays> patches;
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            patches.push_back(patch_rays(traj.camera, {r, c}, config.patch_size));
        }
    }

    CoefficientTensor tensor;
    tensor.query_frames = frames;
    tensor.source_frames = frames;
    tensor.tokens = static_cast<std::uint32_t>(grid.tokens());
    tensor.pairs = static_cast<std::uint32_t>(plan.num_pairs());
    tensor.values.resize(static_cast<std::size_t>(frames) * frames * grid.tokens() * plan.num_pairs());
    std::vector<int> fallbacks(static_cast<std::size_t>(frames) * frames, 0);

    parallel_for(static_cast<int>(frames * frames), [&](int qs) {
        const int q = qs / static_cast<int>(frames);
        const int s = qs % static_cast<int>(frames);
        const RigidTransform rel = relative_transform(traj.poses[static_cast<std::size_t>(s)], traj.poses[static_cast<std::size_t>(q)]);
        for (int t = 0; t < grid.tokens(); ++t) {
            const RadialInterval& iv = intervals[static_cast<std::size_t>(s) * grid.tokens() + t];
            const ModulationCoefficients m =
                crepe_coefficients(traj.camera, rel, patches[static_cast<std::size_t>(t)], iv, plan, config.k);
            fallbacks[static_cast<std::size_t>(qs)] += m.fallback_offsets;
            const std::size_t base = (static_cast<std::size_t>(qs) * grid.tokens() + t) * plan.num_pairs();
            std::copy(m.pairs.begin(), m.pairs.end(), tensor.values.begin() + static_cast<std::ptrdiff_t>(base));
        }
    });

    double min_mag = std::numeric_limits<double>::infinity();
    double max_mag = 0.0;
    double range_max = 0.0;
    std::vector<bool> range_pair(static_cast<std::size_t>(plan.num_pairs()), false);
    for (int g = 2; g < plan.num_groups(); g += 3) {
        const auto& group = plan.groups()[static_cast<std::size_t>(g)];
        for (std::size_t f = 0; f < group.frequencies.size(); ++f) {
            range_pair[static_cast<std::size_t>(group.channel_offset / 2) + f] = true;
        }
    }
    for (std::size_t i = 0; i < tensor.values.size(); ++i) {
        const double m = std::sqrt(tensor.values[i].magnitude_squared());
        min_mag = std::min(min_mag, m);
        max_mag = std::max(max_mag, m);
        if (range_pair[i % tensor.pairs]) {
            range_max = std::max(range_max, m);
        }
    }
    bool bound_ok = true;
    for (const auto& p : tensor.values) {
        bound_ok = bound_ok && p.magnitude_squared() <= 1.0 + 1e-12;
    }
    int fallback_total = 0;
    for (int f : fallbacks) fallback_total += f;

    write_bytes(config.out_dir / "coeffs.bin", encode_coefficients(tensor));
    write_json(config, "coeffs.json",
               {{"frames", frames},
                {"tokens_per_frame", grid.tokens()},
                {"pairs", plan.num_pairs()},
                {"k", config.k},
                {"min_magnitude", min_mag},
                {"max_magnitude", max_mag},
                {"range_channel_max_magnitude", range_max},
                {"identity_fallback_count", fallback_total},
                {"magnitude_bound_ok", bound_ok}});
    return {bound_ok, "pairs=" + std::to_string(tensor.values.size()) + " fallbacks=" + std::to_string(fallback_total)};
}

CommandResult cmd_trace_path(const RunConfig& config) {
    const Trajectory traj = load_trajectory(config);
    const TokenGrid grid = token_grid(traj.camera, config.patch_size);
    const int frames = static_cast<int>(traj.poses.size());
    const int src = config.trace_source_frame < 0 ? frames + config.trace_source_frame : config.trace_source_frame;
    const int qry = config.trace_query_frame < 0 ? frames + config.trace_query_frame : config.trace_query_frame;
    if (src < 0 || src >= frames || qry < 0 || qry >= frames) {
        throw ValidationError("trace frames out of range for a " + std::to_string(frames) + "-frame trajectory");
    }
    const auto intervals = token_intervals(config, traj);
    const RigidTransform rel = relative_transform(traj.poses[static_cast<std::size_t>(src)], traj.poses[static_cast<std::size_t>(qry)]);

    std::ostringstream csv;
    csv << csv_preamble(config);
    csv << "token,offset,k,r_k,u_bounded,v_bounded,range,valid\n";
    bool disk_ok = true;
    int invalid_rows = 0;
    for (int t = 0; t < grid.tokens(); ++t) {
        const PatchRays patch = patch_rays(traj.camera, {t / grid.cols, t % grid.cols}, config.patch_size);
        const auto radii = breakpoints(intervals[static_cast<std::size_t>(src) * grid.tokens() + t], config.k);
        for (std::size_t a = 0; a < patch.rays.size(); ++a) {
            const ProjectedPath path = projected_path(traj.camera, rel, patch.rays[a], radii);
            for (std::size_t k = 0; k < path.points.size(); ++k) {
                const PathPoint& p = path.points[k];
                disk_ok = disk_ok && p.u * p.u + p.v * p.v <= 1.0;
                invalid_rows += p.valid ? 0 : 1;
                csv << t << ',' << a << ',' << k << ',' << format_double(radii[k]) << ',' << format_double(p.u)
                    << ',' << format_double(p.v) << ',' << format_double(p.range) << ',' << (p.valid ? 1 : 0)
                    << '\n';
            }
        }
    }
    write_text(config.out_dir / "trace_path.csv", csv.str());
    return {disk_ok, "invalid_rows=" + std::to_string(invalid_rows)};
}

CommandResult cmd_oracle_check(const RunConfig& config) {
    const OracleSettings& o = config.oracle;
    std::vector<int> ks = o.k_list;
    for (int required : {o.reference_k, o.low_k, o.default_k}) {
        if (std::find(ks.begin(), ks.end(), required) == ks.end()) ks.push_back(required);
    }
    std::sort(ks.begin(), ks.end());

    struct Row {
        PhasorProblem problem;
        Phasor mc;
        std::vector<Phasor> by_k;
    };
    std::vector<std::optional<Row>> rows(static_cast<std::size_t>(o.configs));
    parallel_for(o.configs, [&](int i) {
        const std::uint64_t cfg_seed = mix_seed(config.seed, static_cast<std::uint64_t>(i));
        PhasorProblem p = random_phasor_problem(cfg_seed, o.sigma_zero);
        const MonteCarloResult mc = monte_carlo_phasor(p, o.samples, mix_seed(cfg_seed, 0xc0ffee));
        Row row{p, mc.mean, {}};
        for (int k : ks) row.by_k.push_back(library_phasor(p, k));
        rows[static_cast<std::size_t>(i)] = std::move(row);
    });

    const auto idx = [&](int k) { return static_cast<std::size_t>(std::find(ks.begin(), ks.end(), k) - ks.begin()); };
    std::vector<double> max_mc_err(ks.size(), 0.0);
    int wins = 0;
    std::ostringstream csv;
    csv << csv_preamble(config);
    csv << "config,xi_s,xi_q,mu,sigma,coordinate,frequency";
    for (int k : ks) csv << ",err_mc_k" << k;
    csv << ",err_ref_k" << o.default_k << ",err_ref_k" << o.low_k << "\n";
    for (int i = 0; i < o.configs; ++i) {
        const Row& r = *rows[static_cast<std::size_t>(i)];
        csv << i << ',' << format_double(r.problem.cam_s.xi()) << ',' << format_double(r.problem.cam_q.xi()) << ','
            << format_double(r.problem.interval.mu) << ',' << format_double(r.problem.interval.sigma) << ','
            << r.problem.coordinate << ',' << format_double(r.problem.frequency);
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const double e = component_error(r.by_k[j], r.mc);
            max_mc_err[j] = std::max(max_mc_err[j], e);
            csv << ',' << format_double(e);
        }
        const Phasor& ref = r.by_k[idx(o.reference_k)];
        const double e_default = component_error(r.by_k[idx(o.default_k)], ref);
        const double e_low = component_error(r.by_k[idx(o.low_k)], ref);
        wins += e_default <= e_low ? 1 : 0;
        csv << ',' << format_double(e_default) << ',' << format_double(e_low) << '\n';
    }
    const double win_fraction = static_cast<double>(wins) / o.configs;

    bool pass = true;
    json per_k = json::object();
    for (std::size_t j = 0; j < ks.size(); ++j) {
        per_k[std::to_string(ks[j])] = max_mc_err[j];
    }
    if (o.sigma_zero) {
        for (double e : max_mc_err) pass = pass && e < o.sigma_zero_tolerance;
    } else {
        pass = max_mc_err[idx(o.reference_k)] < o.tolerance && win_fraction >= o.win_fraction;
    }
    write_text(config.out_dir / "oracle_configs.csv", csv.str());
    write_json(config, "oracle_report.json",
               {{"configs", o.configs},
                {"samples", o.samples},
                {"sigma_zero", o.sigma_zero},
                {"max_component_error_vs_mc", per_k},
                {"reference_k", o.reference_k},
                {"tolerance", o.sigma_zero ? o.sigma_zero_tolerance : o.tolerance},
                {"default_k", o.default_k},
                {"low_k", o.low_k},
                {"default_beats_low_fraction", win_fraction},
                {"pass", pass}});
    std::ostringstream msg;
    msg << "max_err(K=" << o.reference_k << ")=" << max_mc_err[idx(o.reference_k)] << " win_fraction=" << win_fraction;
    return {pass, msg.str()};
}

CommandResult cmd_gradcheck(const RunConfig& config) {
    const GradcheckSettings& g = config.gradcheck;
    GradcheckOptions head_opts{g.head_points, g.step, g.tolerance, g.boundary_margin, g.d_model, g.loss_tokens};
    GradcheckOptions loss_opts = head_opts;
    loss_opts.points = g.loss_points;
    const GradcheckReport head = check_head_gradients(head_opts, mix_seed(config.seed, 1));
    const GradcheckReport loss = check_loss_gradients(loss_opts, mix_seed(config.seed, 2));
    const auto to_json = [](const GradcheckReport& r) {
        return json{{"checked", r.checked},
                    {"excluded", r.excluded},
                    {"flagged", r.flagged},
                    {"max_relative_error", r.max_relative_error},
                    {"pass", r.pass}};
    };
    const bool pass = head.pass && loss.pass;
    write_json(config, "gradcheck.json",
               {{"tolerance", g.tolerance}, {"step", g.step}, {"head", to_json(head)}, {"radial_loss", to_json(loss)},
                {"pass", pass}});
    std::ostringstream msg;
    msg << "head_max_rel=" << head.max_relative_error << " loss_max_rel=" << loss.max_relative_error;
    return {pass, msg.str()};
}

CommandResult cmd_train_head(const RunConfig& config) {
    const TrainSettings& ts = config.train;
    const Scene scene = build_scene(ts.scene);
    const auto poses = make_trajectory(ts.trajectory);
    const RadialMap map = render_sequence(scene, poses, ts.trajectory.camera);
    const Mask valid = validity_mask(map, config.r_max);
    const TokenTargets targets = normalize_and_pool(map, valid, near_distance_stat(map, valid), ts.patch_size);
    const ProbeSplit split = split_tokens(targets, ts.holdout_fraction, mix_seed(config.seed, 0x5711));

    ProbeOptions opts;
    opts.steps = ts.steps;
    opts.learning_rate = ts.learning_rate;
    opts.gradient_clip = ts.gradient_clip;
    opts.curve_every = std::max(1, ts.curve_every);
    opts.loss.r_max = config.r_max;

    std::vector<ProbeResult> results(static_cast<std::size_t>(ts.layers));
    std::vector<double> weights(static_cast<std::size_t>(ts.layers));
    for (int layer = 0; layer < ts.layers; ++layer) {
        LayerFeatureSpec fs;
        fs.num_layers = ts.layers;
        fs.d_model = ts.d_model;
        fs.noise = ts.noise;
        fs.depth_weight = ts.depth_weight;
        fs.seed = mix_seed(config.seed, 0xfea7);
        weights[static_cast<std::size_t>(layer)] =
            ts.depth_weight ? *ts.depth_weight : layer_depth_weight(layer, ts.layers);
        const TokenBatch features = make_layer_features(targets, layer, fs);
        results[static_cast<std::size_t>(layer)] =
            train_probe(features, targets, split, opts, mix_seed(config.seed, 0x4ead + static_cast<std::uint64_t>(layer)));
    }

    std::ostringstream csv;
    csv << csv_preamble(config);
    csv << "layer,depth_weight,init_loss,final_loss,loss_reduction,heldout_probe_error,baseline_error,signal_gain\n";
    std::ostringstream curve;
    curve << csv_preamble(config);
    curve << "layer,step,loss\n";
    int best = 0;
    double min_reduction = std::numeric_limits<double>::infinity();
    for (int layer = 0; layer < ts.layers; ++layer) {
        const ProbeResult& r = results[static_cast<std::size_t>(layer)];
        csv << layer << ',' << format_double(weights[static_cast<std::size_t>(layer)]) << ','
            << format_double(r.init_loss) << ',' << format_double(r.final_loss) << ','
            << format_double(r.loss_reduction) << ',' << format_double(r.probe_error) << ','
            << format_double(r.baseline_error) << ',' << format_double(r.signal_gain) << '\n';
        for (const auto& [step, loss] : r.curve) {
            curve << layer << ',' << step << ',' << format_double(loss) << '\n';
        }
        if (r.probe_error < results[static_cast<std::size_t>(best)].probe_error) best = layer;
        min_reduction = std::min(min_reduction, r.loss_reduction);
    }
    const int third = ts.layers / 3;
    const bool middle = best >= third && best < ts.layers - third;
    write_text(config.out_dir / "train_head.csv", csv.str());
    write_text(config.out_dir / "train_curve.csv", curve.str());
    write_json(config, "train_head.json",
               {{"layers", ts.layers},
                {"steps", ts.steps},
                {"valid_tokens", std::count(targets.mask.begin(), targets.mask.end(), 1)},
                {"best_layer", best},
                {"best_layer_in_middle_third", middle},
                {"min_loss_reduction", min_reduction}});
    std::ostringstream msg;
    msg << "best_layer=" << best << " min_loss_reduction=" << min_reduction;
    return {true, msg.str()};
}

CommandResult cmd_mix_sim(const RunConfig& config) {
    const MixSimSettings& ms = config.mix;
    const MixSchedule schedule = MixSchedule::for_mode(ms.mode);
    const int n = ms.frames * ms.tokens_per_frame;

    // Fixed validity pattern with a positive normalized target on valid tokens.
    Rng rng(mix_seed(config.seed, 0x7a1d));
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(n));
    std::vector<double> target(static_cast<std::size_t>(n));
    std::vector<int> valid_per_frame(static_cast<std::size_t>(ms.frames), 0);
    int valid_total = 0;
    for (int i = 0; i < n; ++i) {
        valid[static_cast<std::size_t>(i)] = rng.uniform() < ms.valid_fraction ? 1 : 0;
        target[static_cast<std::size_t>(i)] = std::exp(rng.uniform(-2.0, 2.0));
        valid_per_frame[static_cast<std::size_t>(i / ms.tokens_per_frame)] += valid[static_cast<std::size_t>(i)];
        valid_total += valid[static_cast<std::size_t>(i)];
    }
    const RadialInterval pred{0.0, 3.0};

    std::ostringstream csv;
    csv << csv_preamble(config);
    csv << "step,probability,realized_rate,expected_rate,teacher_count,pred_count,invalid_substituted\n";
    long invalid_substituted_total = 0;
    bool tracking_ok = true;
    for (long step = 0; step <= ms.total_steps; step += ms.log_every) {
        const MixForcingState state(schedule, step, ms.frames, mix_seed(config.seed, static_cast<std::uint64_t>(step)));
        int teacher = 0;
        int invalid_sub = 0;
        for (int i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const bool m = state.substitute(i / ms.tokens_per_frame);
            const bool v = valid[idx] != 0;
            const RadialInterval eff =
                effective_interval(pred, v ? std::optional<double>(target[idx]) : std::nullopt, m, v, state.teacher_sigma());
            const bool substituted = eff.mu != pred.mu || eff.sigma != pred.sigma;
            teacher += substituted ? 1 : 0;
            invalid_sub += (substituted && !v) ? 1 : 0;
        }
        invalid_substituted_total += invalid_sub;
        const double p = state.probability();
        const double realized = static_cast<double>(teacher) / n;
        const double expected = p * valid_total / n;
        double var = 0.0;
        if (ms.mode == MixMode::block_frame) {
            for (int vf : valid_per_frame) var += p * (1.0 - p) * (static_cast<double>(vf) / n) * (static_cast<double>(vf) / n);
        } else {
            var = p * (1.0 - p) * (static_cast<double>(valid_total) / n) * (static_cast<double>(valid_total) / n);
        }
        tracking_ok = tracking_ok && std::abs(realized - expected) <= 5.0 * std::sqrt(var) + 1e-12;
        csv << step << ',' << format_double(p) << ',' << format_double(realized) << ',' << format_double(expected)
            << ',' << teacher << ',' << (n - teacher) << ',' << invalid_sub << '\n';
    }
    const bool pass = invalid_substituted_total == 0 && tracking_ok;
    write_text(config.out_dir / "mix_sim.csv", csv.str());
    write_json(config, "mix_sim.json",
               {{"mode", ms.mode == MixMode::block_frame ? "block_frame" : "video"},
                {"floor", schedule.floor},
                {"tokens", n},
                {"valid_tokens", valid_total},
                {"invalid_substituted", invalid_substituted_total},
                {"tracking_ok", tracking_ok},
                {"pass", pass}});
    return {pass, "invalid_substituted=" + std::to_string(invalid_substituted_total)};
}

}  // namespace crepe::harness
