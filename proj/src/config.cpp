#include "qsm/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/provenance.hpp"

namespace qsm {

namespace {

using nlohmann::json;

// Reads keys out of one JSON object and rejects whatever is left over.
class Section {
public:
    Section(const json& doc, std::string name) : name_(std::move(name)) {
        if (doc.is_null()) return;
        if (!doc.is_object()) throw ValidationError(fmt::format("'{}' must be an object", name_));
        doc_ = doc;
    }

    template <typename T>
    void read(const char* key, T& out) {
        if (!doc_.contains(key)) return;
        seen_.insert(key);
        try {
            out = doc_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ValidationError(fmt::format("'{}.{}' has the wrong type: {}", name_, key, e.what()));
        }
    }

    void read_vec3(const char* key, Vec3& out) {
        std::vector<double> v;
        read(key, v);
        if (!doc_.contains(key)) return;
        if (v.size() != 3) throw ValidationError(fmt::format("'{}.{}' needs 3 numbers", name_, key));
        out = {v[0], v[1], v[2]};
    }

    [[nodiscard]] const json& raw(const char* key) {
        seen_.insert(key);
        return doc_.contains(key) ? doc_.at(key) : null_;
    }

    void finish() const {
        for (const auto& [k, v] : doc_.items())
            if (!seen_.count(k))
                throw ValidationError(fmt::format("unknown key '{}' in '{}'", k, name_));
    }

private:
    std::string name_;
    json doc_ = json::object();
    json null_;
    std::set<std::string> seen_;
};

SphereSource parse_sphere(const json& j, const std::string& where) {
    Section s(j, where);
    SphereSource out;
    s.read_vec3("center_mm", out.center_mm);
    s.read("radius_mm", out.radius_mm);
    s.read("delta_chi", out.delta_chi);
    s.finish();
    return out;
}

PhantomSpec parse_phantom(const json& j) {
    Section s(j, "phantom");
    PhantomSpec p;
    p.dims = {64, 64, 64};
    p.spacing = {1.0, 1.0, 1.0};
    p.brain_mask_radius_mm = 28.0;
    std::vector<std::size_t> dims{64, 64, 64};
    s.read("dims", dims);
    require(dims.size() == 3, "'phantom.dims' needs 3 integers");
    p.dims = {dims[0], dims[1], dims[2]};
    Vec3 vox{1.0, 1.0, 1.0};
    s.read_vec3("voxel_size", vox);
    p.spacing = {vox[0], vox[1], vox[2]};
    s.read("brain_mask_radius_mm", p.brain_mask_radius_mm);
    s.read("texture_sd", p.texture_sd);
    const json& spheres = s.raw("spheres");
    if (!spheres.is_null()) {
        require(spheres.is_array(), "'phantom.spheres' must be an array");
        for (std::size_t i = 0; i < spheres.size(); ++i)
            p.spheres.push_back(parse_sphere(spheres[i], fmt::format("phantom.spheres[{}]", i)));
    }
    const json& bg = s.raw("background_sources");
    if (!bg.is_null()) {
        require(bg.is_array(), "'phantom.background_sources' must be an array");
        for (std::size_t i = 0; i < bg.size(); ++i)
            p.background_sources.push_back(
                parse_sphere(bg[i], fmt::format("phantom.background_sources[{}]", i)));
    }
    const json& cyl = s.raw("cylinders");
    if (!cyl.is_null()) {
        require(cyl.is_array(), "'phantom.cylinders' must be an array");
        for (std::size_t i = 0; i < cyl.size(); ++i) {
            Section c(cyl[i], fmt::format("phantom.cylinders[{}]", i));
            CylinderSource out;
            c.read_vec3("axis_point_mm", out.axis_point_mm);
            c.read_vec3("axis_dir", out.axis_dir);
            c.read("radius_mm", out.radius_mm);
            c.read("half_length_mm", out.half_length_mm);
            c.read("delta_chi", out.delta_chi);
            c.finish();
            p.cylinders.push_back(out);
        }
    }
    s.finish();
    return p;
}

SmvShape parse_shape(const std::string& name) {
    if (name == "binary") return SmvShape::binary;
    if (name == "subvoxel") return SmvShape::subvoxel;
    throw ValidationError(fmt::format("unknown SMV shape '{}' (binary|subvoxel)", name));
}

// Each stage's required inputs must be produced upstream or supplied as files.
void validate_chain(const RunConfig& cfg) {
    require(!cfg.stages.empty(), "config lists no stages");
    std::set<std::string> have;
    for (const auto& [k, v] : cfg.inputs) have.insert(k);
    auto need = [&](const std::string& stage, std::initializer_list<const char*> any_of) {
        for (const char* k : any_of)
            if (have.count(k)) return;
        std::vector<std::string> names(any_of.begin(), any_of.end());
        throw ValidationError(fmt::format("stage '{}' needs {} from an earlier stage or 'inputs'",
                                          stage, fmt::join(names, " or ")));
    };
    for (const auto& st : cfg.stages) {
        if (st == "phantom") {
            have.insert({"chi", "chi_background", "mask"});
        } else if (st == "forward") {
            need(st, {"chi"});
            have.insert("field");
        } else if (st == "echoes") {
            need(st, {"field"});
            have.insert({"echo_phase", "echo_magnitude"});
        } else if (st == "unwrap") {
            need(st, {"echo_phase"});
            have.insert("unwrapped");
        } else if (st == "fit-field") {
            need(st, {"unwrapped"});
            have.insert({"field", "field_valid"});
        } else if (st == "sharp" || st == "resharp" || st == "pdf" || st == "lbv") {
            need(st, {"field"});
            need(st, {"mask"});
            have.insert({"local_field", "local_mask"});
        } else if (st == "tkd") {
            need(st, {"local_field", "field"});
            have.insert("chi_tkd");
        } else if (st == "ntv") {
            need(st, {"local_field", "field"});
            need(st, {"mask", "local_mask"});
            have.insert("chi_ntv");
        } else if (st == "cosmos") {
            need(st, {"chi"});
            have.insert("chi_cosmos");
        } else if (st == "wtfi") {
            need(st, {"field"});
            need(st, {"mask"});
            need(st, {"local_field"});
            have.insert("chi_wtfi");
        } else if (st == "metrics") {
            need(st, {"chi"});
            need(st, {"mask"});
            need(st, {"chi_tkd", "chi_ntv", "chi_cosmos", "chi_wtfi", "estimate"});
        }
    }
}

} // namespace

const std::vector<std::string>& known_stages() {
    static const std::vector<std::string> stages{
        "phantom", "forward", "echoes", "unwrap", "fit-field", "sharp", "resharp",
        "pdf",     "lbv",     "tkd",    "ntv",    "cosmos",    "wtfi",  "metrics"};
    return stages;
}

AcquisitionMeta AcquisitionParams::meta(const Spacing& spacing) const {
    AcquisitionMeta m;
    m.b0_tesla = b0_tesla;
    m.b0_dir = b0_dir;
    for (double te : echo_times_ms) m.echo_times_s.push_back(te * 1e-3);
    m.spacing = spacing;
    return m;
}

double AcquisitionParams::phase_scale() const {
    AcquisitionMeta m;
    m.b0_tesla = b0_tesla;
    return m.radians_per_ppm(effective_te_ms * 1e-3);
}

RunConfig parse_run_config(const nlohmann::json& doc) {
    require(doc.is_object(), "config must be a JSON object");
    Section top(doc, "config");
    RunConfig cfg;
    cfg.source = doc;

    top.read("stages", cfg.stages);
    for (const auto& st : cfg.stages)
        if (std::find(known_stages().begin(), known_stages().end(), st) == known_stages().end())
            throw ValidationError(fmt::format("unknown stage '{}'", st));
    top.read("rng_seed", cfg.rng_seed);
    top.read("output_dir", cfg.output_dir);
    const json& inputs = top.raw("inputs");
    if (!inputs.is_null()) {
        require(inputs.is_object(), "'inputs' must be an object");
        static const std::set<std::string> allowed{
            "chi", "chi_background", "mask", "field", "echo_phase", "echo_magnitude",
            "unwrapped", "local_field", "local_mask", "estimate", "weight"};
        for (const auto& [k, v] : inputs.items()) {
            if (!allowed.count(k)) throw ValidationError(fmt::format("unknown input artifact '{}'", k));
            if (v.is_string())
                cfg.inputs[k] = {v.get<std::string>()};
            else if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
                cfg.inputs[k] = v.get<std::vector<std::string>>();
            else
                throw ValidationError(fmt::format("input '{}' must be a path or a list of paths", k));
        }
    }
    top.read("outputs", cfg.outputs);
    if (doc.contains("dump_slice")) {
        std::size_t z = 0;
        top.read("dump_slice", z);
        cfg.dump_slice = z;
    }

    cfg.phantom = parse_phantom(top.raw("phantom"));
    cfg.phantom.rng_seed = cfg.rng_seed;

    {
        Section s(top.raw("acquisition"), "acquisition");
        s.read("b0_tesla", cfg.acquisition.b0_tesla);
        s.read_vec3("b0_dir", cfg.acquisition.b0_dir);
        s.read("echo_times_ms", cfg.acquisition.echo_times_ms);
        s.read("effective_te_ms", cfg.acquisition.effective_te_ms);
        s.finish();
        require(cfg.acquisition.b0_tesla > 0, "'acquisition.b0_tesla' must be positive");
        require(cfg.acquisition.effective_te_ms > 0, "'acquisition.effective_te_ms' must be positive");
        for (double te : cfg.acquisition.echo_times_ms)
            require(te > 0, "echo times must be positive");
    }
    {
        Section s(top.raw("forward"), "forward");
        s.read("padded", cfg.forward_padded);
        s.finish();
    }
    {
        Section s(top.raw("echoes"), "echoes");
        s.read("noise_sd", cfg.echo_noise_sd);
        s.finish();
        require(cfg.echo_noise_sd >= 0, "'echoes.noise_sd' must be nonnegative");
    }
    {
        Section s(top.raw("fit-field"), "fit-field");
        s.read("with_offset", cfg.fit.with_offset);
        s.finish();
    }
    {
        Section s(top.raw("sharp"), "sharp");
        std::string shape = "binary";
        s.read("radius_mm", cfg.sharp.radius_mm);
        s.read("threshold", cfg.sharp.threshold);
        s.read("smv_shape", shape);
        s.finish();
        cfg.sharp.shape = parse_shape(shape);
    }
    {
        Section s(top.raw("resharp"), "resharp");
        std::string shape = "binary";
        s.read("radius_mm", cfg.resharp.radius_mm);
        s.read("lambda", cfg.resharp.lambda);
        s.read("cg_tol", cfg.resharp.cg_tol);
        s.read("cg_max_iter", cfg.resharp.cg_max_iter);
        s.read("smv_shape", shape);
        s.finish();
        cfg.resharp.shape = parse_shape(shape);
    }
    {
        Section s(top.raw("pdf"), "pdf");
        s.read("cg_tol", cfg.pdf.cg_tol);
        s.read("cg_max_iter", cfg.pdf.cg_max_iter);
        s.finish();
    }
    {
        Section s(top.raw("lbv"), "lbv");
        s.read("cg_tol", cfg.lbv.cg_tol);
        s.read("cg_max_iter", cfg.lbv.cg_max_iter);
        s.finish();
    }
    {
        Section s(top.raw("tkd"), "tkd");
        s.read("threshold", cfg.tkd_threshold);
        s.finish();
    }
    {
        Section s(top.raw("ntv"), "ntv");
        s.read("lambda_tv", cfg.ntv.lambda_tv);
        s.read("iterations", cfg.ntv.iterations);
        s.read("initial_step", cfg.ntv.initial_step);
        s.finish();
    }
    {
        Section s(top.raw("cosmos"), "cosmos");
        s.read("tilt_deg", cfg.cosmos.tilt_deg);
        s.read("epsilon", cfg.cosmos.epsilon);
        s.read("noise_sd", cfg.cosmos.noise_sd);
        s.finish();
    }
    {
        Section s(top.raw("wtfi"), "wtfi");
        auto& w = cfg.wtfi;
        s.read("iterations", w.options.iterations);
        s.read("lambda1", w.weights.lambda1);
        s.read("lambda2", w.weights.lambda2);
        s.read("lambda3", w.weights.lambda3);
        s.read("lambda4", w.weights.lambda4);
        std::string seed = std::string(to_string(w.options.seed));
        s.read("seed", seed);
        w.options.seed = seed_from_string(seed);
        s.read("seed_radius_mm", w.options.seed_radius_mm);
        s.read("tkd_threshold", w.options.tkd_threshold);
        s.read("initial_step", w.options.step.initial_step);
        std::vector<double> scales(w.options.step.scales.begin(), w.options.step.scales.end());
        s.read("step_scales", scales);
        require(scales.size() == 4, "'wtfi.step_scales' needs 4 numbers (chi1, fL1, chi2, fL2)");
        std::copy(scales.begin(), scales.end(), w.options.step.scales.begin());
        s.read("erosion_radius_mm", w.erosion_radius_mm);
        s.finish();
    }
    {
        Section s(top.raw("metrics"), "metrics");
        s.read("region", cfg.metrics_region);
        s.finish();
        require(cfg.metrics_region == "brain" || cfg.metrics_region == "local",
                "'metrics.region' must be 'brain' or 'local'");
    }
    top.finish();
    validate_chain(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("cannot open config '{}'", path));
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
    }
    return parse_run_config(doc);
}

std::string config_hash(const RunConfig& config) {
    return sha256_hex(config.source.dump()).substr(0, 12);
}

} // namespace qsm
