#include "pedsplat/config.hpp"

#include "pedsplat/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

extern char** environ;

namespace pedsplat {

namespace {

using nlohmann::json;

// One visitor drives both directions so the key set cannot drift.
struct Reader {
    const json& node;
    std::string where;
    std::set<std::string> seen;

    template <class T>
    void field(const char* key, T& value) {
        seen.insert(key);
        if (!node.contains(key)) return;
        try {
            value = node.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config " + where + key + ": " + e.what());
        }
    }
    void field(const char* key, std::filesystem::path& value) {
        std::string s = value.string();
        field(key, s);
        value = s;
    }
    void field(const char* key, Eigen::Vector3d& value) {
        std::vector<double> v{value.x(), value.y(), value.z()};
        field(key, v);
        if (v.size() != 3) throw ConfigError("config " + where + key + ": expected 3 numbers");
        value = Eigen::Vector3d(v[0], v[1], v[2]);
    }
    template <class F>
    void section(const char* key, F&& body) {
        seen.insert(key);
        if (!node.contains(key)) return;
        if (!node.at(key).is_object()) throw ConfigError("config " + where + key + ": expected an object");
        Reader sub{node.at(key), where + key + ".", {}};
        body(sub);
        sub.finish();
    }
    void finish() const {
        for (const auto& [k, v] : node.items())
            if (!seen.count(k)) throw ConfigError("config: unknown key " + where + k);
    }
};

struct Writer {
    json& node;

    template <class T>
    void field(const char* key, T& value) { node[key] = value; }
    void field(const char* key, std::filesystem::path& value) { node[key] = value.string(); }
    void field(const char* key, Eigen::Vector3d& value) { node[key] = {value.x(), value.y(), value.z()}; }
    template <class F>
    void section(const char* key, F&& body) {
        node[key] = json::object();
        Writer sub{node[key]};
        body(sub);
    }
};

template <class V>
void visit(PipelineConfig& c, V& v) {
    v.field("loops", c.loops);
    v.field("superpixels", c.superpixels);
    v.field("pixel_stride", c.pixel_stride);
    v.field("gate", c.gate);
    v.section("slic", [&](auto& s) {
        s.field("iterations", c.slic.iterations);
        s.field("compactness", c.slic.compactness);
    });
    v.section("ray_sampling", [&](auto& s) {
        auto& r = c.ray_sampling;
        s.field("samples_per_ray", r.samples_per_ray);
        s.field("initial_opacity", r.initial_opacity);
        Eigen::Vector3d lo = r.scene_bounds.min(), hi = r.scene_bounds.max();
        s.field("bounds_min", lo);
        s.field("bounds_max", hi);
        r.scene_bounds = Eigen::AlignedBox3d(lo, hi);
    });
    v.section("depth_init", [&](auto& s) {
        s.field("samples", c.depth_init.samples);
        s.field("half_width", c.depth_init.half_width);
        s.field("initial_opacity", c.depth_init.initial_opacity);
    });
    v.section("loss", [&](auto& s) {
        s.field("sp", c.loss.sp);
        s.field("mask", c.loss.mask);
        s.field("depth", c.loss.depth);
        s.field("opacity", c.loss.opacity);
    });
    v.section("optim", [&](auto& s) {
        auto& o = c.optim;
        s.field("iterations", o.iterations);
        s.field("step_mean", o.steps.mean);
        s.field("step_log_scales", o.steps.log_scales);
        s.field("step_quaternion", o.steps.quaternion);
        s.field("step_opacity", o.steps.opacity_logit);
        s.field("step_color", o.steps.color);
        s.field("beta1", o.beta1);
        s.field("beta2", o.beta2);
        s.field("epsilon", o.epsilon);
        s.field("prune_opacity", o.prune_opacity);
        s.field("grow_gradient", o.grow_gradient);
        s.field("densify_interval", o.densify_interval);
        s.field("max_split_fraction", o.max_split_fraction);
        s.field("max_gaussians", o.max_gaussians);
        s.field("seed", o.seed);
    });
    v.section("ground", [&](auto& s) {
        auto& g = c.ground;
        s.field("x_min", g.range.x_min);
        s.field("x_max", g.range.x_max);
        s.field("y_min", g.range.y_min);
        s.field("y_max", g.range.y_max);
        s.field("step", g.step);
        s.field("backdrop", g.backdrop);
        s.field("gaussian_stride", g.gaussian_stride);
        s.field("gaussian_band", g.gaussian_band);
    });
    v.section("filter", [&](auto& s) {
        s.field("tau", c.filter.tau);
        s.field("guard", c.filter.guard);
    });
    v.section("matching", [&](auto& s) {
        s.field("min_visibility", c.matching.min_visibility);
        s.field("erosion", c.matching.erosion);
        s.field("merge_share", c.matching.merge_share);
        s.field("surface_tolerance", c.matching.surface_tolerance);
    });
    v.section("localization", [&](auto& s) {
        s.field("min_gaussians", c.localization.min_gaussians);
        s.field("eps", c.localization.eps);
        s.field("min_pts", c.localization.min_pts);
        s.field("nms_radius", c.localization.nms_radius);
    });
    v.section("compensation", [&](auto& s) {
        s.field("min_points", c.compensation.min_points);
        s.field("max_overlap", c.compensation.max_overlap);
        s.field("eps", c.compensation.eps);
        s.field("min_pts", c.compensation.min_pts);
    });
    v.section("paths", [&](auto& s) {
        s.field("data", c.data_dir);
        s.field("output", c.output_dir);
        s.field("depth_dropin", c.depth_dropin);
        s.field("oracle_command", c.oracle_command);
    });
}

PipelineConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    PipelineConfig cfg;
    Reader r{j, "", {}};
    visit(cfg, r);
    r.finish();
    cfg.validate();
    return cfg;
}

json to_json(PipelineConfig cfg) {
    json j = json::object();
    Writer w{j};
    visit(cfg, w);
    return j;
}

} // namespace

void PipelineConfig::validate() const {
    if (loops < 1) throw ConfigError("config: loops must be >= 1");
    if (superpixels < 1) throw ConfigError("config: superpixels must be >= 1");
    if (pixel_stride < 1) throw ConfigError("config: pixel_stride must be >= 1");
    if (!(gate > 0.0)) throw ConfigError("config: gate must be positive");
    if (depth_init.samples < 1 || !(depth_init.half_width >= 0.0) ||
        !(depth_init.initial_opacity > 0.0 && depth_init.initial_opacity < 1.0))
        throw ConfigError("config: invalid depth_init");
    if (!(ground.step > 0.0) || ground.gaussian_stride < 1 || ground.gaussian_band < 0)
        throw ConfigError("config: invalid ground settings");
    ground.range.validate();
    ray_sampling.validate();
    loss.validate();
    optim.validate();
    filter.validate();
    matching.validate();
    localization.validate();
    compensation.validate();
}

PipelineConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& cfg) { return to_json(cfg).dump(2); }

PipelineConfig apply_env_overrides(const PipelineConfig& cfg, const std::map<std::string, std::string>& env) {
    static const std::string prefix = "PEDSPLAT_";
    json j = to_json(cfg);
    bool changed = false;
    for (const auto& [name, raw] : env) {
        if (name.rfind(prefix, 0) != 0) continue;
        std::string key = name.substr(prefix.size());
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
        json::json_pointer ptr;
        for (std::size_t pos = 0;;) {
            const auto next = key.find("__", pos);
            ptr /= key.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            if (next == std::string::npos) break;
            pos = next + 2;
        }
        if (!j.contains(ptr)) throw ConfigError("environment override " + name + " names no config key");
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        j[ptr] = value;
        changed = true;
    }
    return changed ? from_json(j) : cfg;
}

std::map<std::string, std::string> process_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq != std::string::npos) out.emplace(entry.substr(0, eq), entry.substr(eq + 1));
    }
    return out;
}

} // namespace pedsplat
