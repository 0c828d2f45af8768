#include "crepe/harness/run_config.hpp"

#include <cstdio>

#include "crepe/errors.hpp"
#include "crepe/harness/formats.hpp"

namespace crepe::harness {

namespace {

using nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& target) {
    if (j.contains(key) && !j[key].is_null()) {
        try {
            target = j[key].get<T>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("config field '") + key + "': " + e.what());
        }
    }
}

SceneKind scene_kind_from(const std::string& s) {
    if (s == "point_cloud") return SceneKind::point_cloud;
    if (s == "fronto_plane") return SceneKind::fronto_plane;
    if (s == "two_planes") return SceneKind::two_planes;
    throw ValidationError("unknown scene kind '" + s + "'");
}

MotionKind motion_from(const std::string& s) {
    if (s == "orbit") return MotionKind::orbit;
    if (s == "dolly") return MotionKind::dolly;
    if (s == "pan") return MotionKind::pan;
    throw ValidationError("unknown motion '" + s + "'");
}

MixMode mode_from(const std::string& s) {
    if (s == "block_frame") return MixMode::block_frame;
    if (s == "video") return MixMode::video;
    throw ValidationError("unknown MixForcing mode '" + s + "'");
}

SceneSpec scene_from(const json& j, SceneSpec s) {
    if (j.contains("kind")) s.kind = scene_kind_from(j["kind"].get<std::string>());
    read_opt(j, "extent", s.extent);
    read_opt(j, "num_points", s.num_points);
    read_opt(j, "seed", s.seed);
    try {
        s.validate();
    } catch (const InputError& e) {
        throw ValidationError(e.what());
    }
    return s;
}

TrajectorySpec trajectory_spec_from(const json& j, TrajectorySpec t) {
    read_opt(j, "frames", t.frames);
    if (j.contains("motion")) t.motion = motion_from(j["motion"].get<std::string>());
    read_opt(j, "amplitude", t.amplitude);
    read_opt(j, "orbit_radius", t.orbit_radius);
    if (j.contains("camera")) t.camera = camera_from_json(j["camera"]);
    try {
        t.validate();
    } catch (const InputError& e) {
        throw ValidationError(e.what());
    }
    return t;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string RunConfig::hash() const {
    const std::string text = raw.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunConfig::validate() const {
    if (k < 2) throw ValidationError("config: K must be at least 2");
    if (patch_size < 1) throw ValidationError("config: patch_size must be positive");
    if (dim_per_coordinate < 2 || dim_per_coordinate % 2 != 0) {
        throw ValidationError("config: dim_per_coordinate must be a positive even integer");
    }
    if (!(r_max > 0.0)) throw ValidationError("config: r_max must be positive");
    if (oracle.configs < 1 || oracle.samples < 1) throw ValidationError("config: oracle counts must be positive");
    for (int kk : oracle.k_list) {
        if (kk < 2) throw ValidationError("config: oracle K values must be at least 2");
    }
    if (gradcheck.head_points < 0 || gradcheck.loss_points < 0 || gradcheck.d_model < 1 || !(gradcheck.step > 0.0)) {
        throw ValidationError("config: invalid gradcheck settings");
    }
    if (train.layers < 1 || train.d_model < 1 || train.steps < 0 || !(train.learning_rate > 0.0) ||
        !(train.holdout_fraction > 0.0 && train.holdout_fraction < 1.0) || train.patch_size < 1) {
        throw ValidationError("config: invalid train settings");
    }
    if (mix.total_steps < 0 || mix.log_every < 1 || mix.frames < 1 || mix.tokens_per_frame < 1 ||
        !(mix.valid_fraction >= 0.0 && mix.valid_fraction <= 1.0)) {
        throw ValidationError("config: invalid mix-sim settings");
    }
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) {
        throw ValidationError("config: top level must be a JSON object");
    }
    RunConfig c;
    c.raw = j;
    read_opt(j, "k", c.k);
    read_opt(j, "seed", c.seed);
    if (j.contains("out")) c.out_dir = resolve(base_dir, j["out"].get<std::string>());
    if (j.contains("trajectory")) c.trajectory_path = resolve(base_dir, j["trajectory"].get<std::string>());
    if (j.contains("trajectory_spec")) c.trajectory_spec = trajectory_spec_from(j["trajectory_spec"], c.trajectory_spec);
    if (j.contains("rdm1")) c.rdm1_path = resolve(base_dir, j["rdm1"].get<std::string>());
    if (j.contains("intervals")) {
        RadialInterval iv;
        read_opt(j["intervals"], "mu", iv.mu);
        read_opt(j["intervals"], "sigma", iv.sigma);
        if (!iv.is_clamped()) {
            throw ValidationError("config: intervals must lie inside the [-3, 3] log range");
        }
        c.interval_override = iv;
    }
    read_opt(j, "interval_sigma", c.interval_sigma);
    read_opt(j, "patch_size", c.patch_size);
    read_opt(j, "dim_per_coordinate", c.dim_per_coordinate);
    read_opt(j, "rope_base", c.rope_base);
    read_opt(j, "r_max", c.r_max);
    if (j.contains("trace")) {
        read_opt(j["trace"], "source_frame", c.trace_source_frame);
        read_opt(j["trace"], "query_frame", c.trace_query_frame);
    }
    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        read_opt(o, "configs", c.oracle.configs);
        read_opt(o, "samples", c.oracle.samples);
        read_opt(o, "k_list", c.oracle.k_list);
        read_opt(o, "reference_k", c.oracle.reference_k);
        read_opt(o, "low_k", c.oracle.low_k);
        read_opt(o, "default_k", c.oracle.default_k);
        read_opt(o, "tolerance", c.oracle.tolerance);
        read_opt(o, "win_fraction", c.oracle.win_fraction);
        read_opt(o, "sigma_zero", c.oracle.sigma_zero);
        read_opt(o, "sigma_zero_tolerance", c.oracle.sigma_zero_tolerance);
    }
    if (j.contains("gradcheck")) {
        const json& g = j["gradcheck"];
        read_opt(g, "head_points", c.gradcheck.head_points);
        read_opt(g, "loss_points", c.gradcheck.loss_points);
        read_opt(g, "d_model", c.gradcheck.d_model);
        read_opt(g, "loss_tokens", c.gradcheck.loss_tokens);
        read_opt(g, "step", c.gradcheck.step);
        read_opt(g, "tolerance", c.gradcheck.tolerance);
        read_opt(g, "boundary_margin", c.gradcheck.boundary_margin);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        read_opt(t, "layers", c.train.layers);
        read_opt(t, "d_model", c.train.d_model);
        read_opt(t, "steps", c.train.steps);
        read_opt(t, "learning_rate", c.train.learning_rate);
        read_opt(t, "gradient_clip", c.train.gradient_clip);
        read_opt(t, "noise", c.train.noise);
        if (t.contains("depth_weight") && !t["depth_weight"].is_null()) {
            c.train.depth_weight = t["depth_weight"].get<double>();
        }
        read_opt(t, "holdout_fraction", c.train.holdout_fraction);
        read_opt(t, "curve_every", c.train.curve_every);
        read_opt(t, "patch_size", c.train.patch_size);
        if (t.contains("scene")) c.train.scene = scene_from(t["scene"], c.train.scene);
        if (t.contains("trajectory_spec")) c.train.trajectory = trajectory_spec_from(t["trajectory_spec"], c.train.trajectory);
    }
    if (j.contains("mix")) {
        const json& m = j["mix"];
        if (m.contains("mode")) c.mix.mode = mode_from(m["mode"].get<std::string>());
        read_opt(m, "total_steps", c.mix.total_steps);
        read_opt(m, "log_every", c.mix.log_every);
        read_opt(m, "frames", c.mix.frames);
        read_opt(m, "tokens_per_frame", c.mix.tokens_per_frame);
        read_opt(m, "valid_fraction", c.mix.valid_fraction);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::optional<std::filesystem::path>& config_path, std::optional<std::uint64_t> seed,
                      std::optional<int> k, std::optional<std::filesystem::path> out_dir) {
    json j = json::object();
    std::filesystem::path base = std::filesystem::current_path();
    if (config_path) {
        j = read_json(*config_path);
        base = std::filesystem::absolute(*config_path).parent_path();
    }
    if (!j.is_object()) {
        throw ValidationError("config: top level must be a JSON object");
    }
    if (seed) j["seed"] = *seed;
    if (k) j["k"] = *k;
    try {
        RunConfig c = config_from_json(j, base);
        if (out_dir) c.out_dir = *out_dir;
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

}  // namespace crepe::harness
