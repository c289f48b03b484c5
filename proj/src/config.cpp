#include "patchae/config.hpp"

#include <charconv>
#include <type_traits>
#include <utility>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "patchae/errors.hpp"

namespace patchae {

namespace {

std::string_view to_string(EncoderInit i) noexcept { return i == EncoderInit::random ? "random" : "pretrained"; }
std::string_view to_string(nn::UpsampleMode m) noexcept {
    return m == nn::UpsampleMode::nearest ? "nearest" : "bilinear";
}

EncoderInit parse_init(const std::string& s) {
    if (s == "random") return EncoderInit::random;
    if (s == "pretrained") return EncoderInit::pretrained;
    throw ConfigError("encoder.init: expected random|pretrained, got '" + s + "'");
}

nn::UpsampleMode parse_upsample(const std::string& s) {
    if (s == "nearest") return nn::UpsampleMode::nearest;
    if (s == "bilinear") return nn::UpsampleMode::bilinear;
    throw ConfigError("encoder.upsample: expected nearest|bilinear, got '" + s + "'");
}

class Section {
public:
    Section(const YAML::Node& root, const std::string& name) : name_(name), node_(root[name]) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(name_ + ": expected a mapping");
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return;
        const YAML::Node v = std::as_const(node_)[key];
        if (!v) return;
        try {
            read(v, out);
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            if (msg.rfind(path(key), 0) == 0) throw;
            throw ConfigError(path(key) + ": " + msg);
        } catch (const YAML::Exception&) {
            throw ConfigError(path(key) + ": invalid value");
        }
    }

    // Rejects keys that were never requested.
    void finish() const {
        if (!node_ || node_.IsNull()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError("unknown key '" + path(key) + "'");
        }
    }

private:
    std::string path(const std::string& key) const { return name_ + "." + key; }

    static void read(const YAML::Node& v, int& out) { out = v.as<int>(); }
    static void read(const YAML::Node& v, double& out) { out = v.as<double>(); }
    static void read(const YAML::Node& v, bool& out) { out = v.as<bool>(); }
    static void read(const YAML::Node& v, std::uint64_t& out) { out = v.as<std::uint64_t>(); }
    static void read(const YAML::Node& v, std::string& out) { out = v.as<std::string>(); }
    static void read(const YAML::Node& v, Range& out) {
        if (!v.IsSequence() || v.size() != 2) throw ConfigError("expected [min, max]");
        out.min = v[0].as<double>();
        out.max = v[1].as<double>();
    }
    template <std::size_t N>
    static void read(const YAML::Node& v, std::array<int, N>& out) {
        if (!v.IsSequence() || v.size() != N) throw ConfigError("expected a list of " + std::to_string(N) + " integers");
        for (std::size_t i = 0; i < N; ++i) out[i] = v[i].as<int>();
    }
    static void read(const YAML::Node& v, std::vector<DefectShape>& out) {
        if (!v.IsSequence()) throw ConfigError("expected a list of shapes");
        out.clear();
        for (const auto& s : v) out.push_back(parse_defect_shape(s.as<std::string>()));
    }
    static void read(const YAML::Node& v, DefectSource& out) { out = parse_defect_source(v.as<std::string>()); }
    static void read(const YAML::Node& v, EncoderInit& out) { out = parse_init(v.as<std::string>()); }
    static void read(const YAML::Node& v, nn::UpsampleMode& out) { out = parse_upsample(v.as<std::string>()); }
    static void read(const YAML::Node& v, OptimizerKind& out) { out = parse_optimizer(v.as<std::string>()); }
    static void read(const YAML::Node& v, ToyTexture& out) { out = parse_toy_texture(v.as<std::string>()); }
    static void read(const YAML::Node& v, ToyDefectKind& out) { out = parse_toy_defect(v.as<std::string>()); }

    std::string name_;
    const YAML::Node node_;
    std::set<std::string> seen_;
};

YAML::Node parse_root(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) throw ConfigError("config root must be a mapping");
    return root;
}

void check_sections(const YAML::Node& root, const std::set<std::string>& allowed) {
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown section '" + key + "'");
    }
}

void read_encoder(Section& s, EncoderConfig& e) {
    s.get("input_size", e.input_size);
    s.get("backbone", e.backbone);
    s.get("fuse_stages", e.fuse_stages);
    s.get("c1", e.c1);
    s.get("c2", e.c2);
    s.get("c3", e.c3);
    s.get("head_hidden", e.head_hidden);
    s.get("upsample", e.upsample);
    s.get("tiny_widths", e.tiny_widths);
    s.get("resnet_blocks", e.resnet_blocks);
    s.get("resnet_width_per_group", e.resnet_width_per_group);
    s.get("init", e.init);
    s.get("pretrained_weights", e.pretrained_weights);
    s.finish();
}

// --- emitter helpers -------------------------------------------------------

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
void kv(YAML::Emitter& out, const char* key, const T& value) {
    if constexpr (std::is_same_v<T, double>)
        out << YAML::Key << key << YAML::Value << shortest(value);
    else
        out << YAML::Key << key << YAML::Value << value;
}

void kv(YAML::Emitter& out, const char* key, std::string_view value) {
    out << YAML::Key << key << YAML::Value << std::string(value);
}

void kv(YAML::Emitter& out, const char* key, const Range& r) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << shortest(r.min) << shortest(r.max)
        << YAML::EndSeq;
}

template <std::size_t N>
void kv(YAML::Emitter& out, const char* key, const std::array<int, N>& a) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int v : a) out << v;
    out << YAML::EndSeq;
}

void emit_encoder(YAML::Emitter& out, const EncoderConfig& e, bool with_init) {
    out << YAML::BeginMap;
    kv(out, "input_size", e.input_size);
    kv(out, "backbone", e.backbone);
    kv(out, "fuse_stages", e.fuse_stages);
    kv(out, "c1", e.c1);
    kv(out, "c2", e.c2);
    kv(out, "c3", e.c3);
    kv(out, "head_hidden", e.head_hidden);
    kv(out, "upsample", to_string(e.upsample));
    kv(out, "tiny_widths", e.tiny_widths);
    kv(out, "resnet_blocks", e.resnet_blocks);
    kv(out, "resnet_width_per_group", e.resnet_width_per_group);
    if (with_init) {
        kv(out, "init", to_string(e.init));
        kv(out, "pretrained_weights", e.pretrained_weights);
    }
    out << YAML::EndMap;
}

void begin_emitter(YAML::Emitter& out) {
    out.SetIndent(2);
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs <= 0) throw ConfigError("training.epochs: must be positive");
    if (batch_size <= 0) throw ConfigError("training.batch_size: must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("training.learning_rate: must be >= 0");
    if (!(backbone_lr_scale > 0.0 && backbone_lr_scale <= 1.0))
        throw ConfigError("training.backbone_lr_scale: must lie in (0, 1]");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("training.momentum: must lie in [0, 1)");
}

void BankConfig::validate() const {
    if (!(coreset_fraction > 0.0 && coreset_fraction <= 1.0))
        throw ConfigError("bank.coreset_fraction: must lie in (0, 1]");
}

void EvaluationConfig::validate() const {
    if (reweight_neighbors < 1) throw ConfigError("evaluation.reweight_neighbors: must be >= 1");
    if (threads < 0) throw ConfigError("evaluation.threads: must be >= 0");
}

void RunConfig::validate() const {
    augmentation.validate();
    encoder.validate();
    decoder_config().validate();
    loss.validate();
    training.validate();
    bank.validate();
    evaluation.validate();
    toy.validate();
}

RunConfig parse_run_config(const std::string& yaml_text) {
    const YAML::Node root = parse_root(yaml_text);
    check_sections(root,
                   {"data", "augmentation", "encoder", "decoder", "loss", "training", "bank", "evaluation", "toy"});
    RunConfig c;
    {
        Section s(root, "data");
        s.get("class_dir", c.data.class_dir);
        s.get("output_dir", c.data.output_dir);
        s.finish();
    }
    {
        Section s(root, "augmentation");
        auto& a = c.augmentation;
        s.get("enabled", a.enabled);
        s.get("apply_prob", a.apply_prob);
        s.get("shapes", a.shapes);
        s.get("source", a.source);
        s.get("width", a.width);
        s.get("height", a.height);
        s.get("angle", a.angle);
        s.get("center_x", a.center_x);
        s.get("center_y", a.center_y);
        s.get("jitter", a.jitter);
        s.finish();
    }
    {
        Section s(root, "encoder");
        read_encoder(s, c.encoder);
    }
    {
        Section s(root, "decoder");
        s.get("hidden", c.decoder.hidden);
        s.finish();
    }
    {
        Section s(root, "loss");
        s.get("alpha", c.loss.alpha);
        s.get("norm_eps", c.loss.norm_eps);
        s.get("squared", c.loss.squared);
        s.get("per_channel", c.loss.per_channel);
        s.finish();
    }
    {
        Section s(root, "training");
        auto& t = c.training;
        s.get("epochs", t.epochs);
        s.get("batch_size", t.batch_size);
        s.get("learning_rate", t.learning_rate);
        s.get("backbone_lr_scale", t.backbone_lr_scale);
        s.get("freeze_backbone", t.freeze_backbone);
        s.get("seed", t.seed);
        s.get("optimizer", t.optimizer);
        s.get("momentum", t.momentum);
        s.get("deterministic", t.deterministic);
        s.finish();
    }
    {
        Section s(root, "bank");
        s.get("coreset_fraction", c.bank.coreset_fraction);
        s.get("coreset_seed", c.bank.coreset_seed);
        s.finish();
    }
    {
        Section s(root, "evaluation");
        s.get("reweight", c.evaluation.reweight);
        s.get("reweight_neighbors", c.evaluation.reweight_neighbors);
        s.get("threads", c.evaluation.threads);
        s.finish();
    }
    {
        Section s(root, "toy");
        auto& t = c.toy;
        s.get("n_train", t.n_train);
        s.get("n_test_good", t.n_test_good);
        s.get("n_test_defect", t.n_test_defect);
        s.get("texture", t.texture);
        s.get("defect_kind", t.defect_kind);
        s.get("seed", t.seed);
        s.get("image_size", t.image_size);
        s.get("class_name", t.class_name);
        s.finish();
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& c) {
    YAML::Emitter out;
    begin_emitter(out);
    out << YAML::BeginMap;

    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    kv(out, "class_dir", c.data.class_dir);
    kv(out, "output_dir", c.data.output_dir);
    out << YAML::EndMap;

    const auto& a = c.augmentation;
    out << YAML::Key << "augmentation" << YAML::Value << YAML::BeginMap;
    kv(out, "enabled", a.enabled);
    kv(out, "apply_prob", a.apply_prob);
    out << YAML::Key << "shapes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto s : a.shapes) out << std::string(to_string(s));
    out << YAML::EndSeq;
    kv(out, "source", to_string(a.source));
    kv(out, "width", a.width);
    kv(out, "height", a.height);
    kv(out, "angle", a.angle);
    kv(out, "center_x", a.center_x);
    kv(out, "center_y", a.center_y);
    kv(out, "jitter", a.jitter);
    out << YAML::EndMap;

    out << YAML::Key << "encoder" << YAML::Value;
    emit_encoder(out, c.encoder, true);

    out << YAML::Key << "decoder" << YAML::Value << YAML::BeginMap;
    kv(out, "hidden", c.decoder.hidden);
    out << YAML::EndMap;

    out << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
    kv(out, "alpha", c.loss.alpha);
    kv(out, "norm_eps", c.loss.norm_eps);
    kv(out, "squared", c.loss.squared);
    kv(out, "per_channel", c.loss.per_channel);
    out << YAML::EndMap;

    const auto& t = c.training;
    out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
    kv(out, "epochs", t.epochs);
    kv(out, "batch_size", t.batch_size);
    kv(out, "learning_rate", t.learning_rate);
    kv(out, "backbone_lr_scale", t.backbone_lr_scale);
    kv(out, "freeze_backbone", t.freeze_backbone);
    kv(out, "seed", t.seed);
    kv(out, "optimizer", to_string(t.optimizer));
    kv(out, "momentum", t.momentum);
    kv(out, "deterministic", t.deterministic);
    out << YAML::EndMap;

    out << YAML::Key << "bank" << YAML::Value << YAML::BeginMap;
    kv(out, "coreset_fraction", c.bank.coreset_fraction);
    kv(out, "coreset_seed", c.bank.coreset_seed);
    out << YAML::EndMap;

    out << YAML::Key << "evaluation" << YAML::Value << YAML::BeginMap;
    kv(out, "reweight", c.evaluation.reweight);
    kv(out, "reweight_neighbors", c.evaluation.reweight_neighbors);
    kv(out, "threads", c.evaluation.threads);
    out << YAML::EndMap;

    const auto& y = c.toy;
    out << YAML::Key << "toy" << YAML::Value << YAML::BeginMap;
    kv(out, "n_train", y.n_train);
    kv(out, "n_test_good", y.n_test_good);
    kv(out, "n_test_defect", y.n_test_defect);
    kv(out, "texture", to_string(y.texture));
    kv(out, "defect_kind", to_string(y.defect_kind));
    kv(out, "seed", y.seed);
    kv(out, "image_size", y.image_size);
    kv(out, "class_name", y.class_name);
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string serialize_architecture(const EncoderConfig& encoder, const DecoderConfig& decoder) {
    YAML::Emitter out;
    begin_emitter(out);
    out << YAML::BeginMap;
    out << YAML::Key << "encoder" << YAML::Value;
    emit_encoder(out, encoder, false);
    out << YAML::Key << "decoder" << YAML::Value << YAML::BeginMap;
    kv(out, "c3", decoder.c3);
    kv(out, "hidden", decoder.hidden);
    kv(out, "patch_h", decoder.patch_h);
    kv(out, "patch_w", decoder.patch_w);
    kv(out, "channels", decoder.channels);
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void parse_architecture(const std::string& yaml_text, EncoderConfig& encoder, DecoderConfig& decoder) {
    const YAML::Node root = parse_root(yaml_text);
    check_sections(root, {"encoder", "decoder"});
    encoder = EncoderConfig{};
    {
        Section s(root, "encoder");
        read_encoder(s, encoder);
    }
    {
        Section s(root, "decoder");
        s.get("c3", decoder.c3);
        s.get("hidden", decoder.hidden);
        s.get("patch_h", decoder.patch_h);
        s.get("patch_w", decoder.patch_w);
        s.get("channels", decoder.channels);
        s.finish();
    }
    encoder.validate();
    decoder.validate();
}

std::uint64_t encoder_hash(const EncoderConfig& encoder) {
    YAML::Emitter out;
    begin_emitter(out);
    emit_encoder(out, encoder, false);
    return detail::fnv1a64(out.c_str());
}

}  // namespace patchae
