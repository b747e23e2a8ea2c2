#include "muvine/config.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace muvine {

namespace {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw ConfigError("bad value '" + text + "' for " + key);
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("bad boolean '" + text + "' for " + key);
}

std::string show(double v) { return io::format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
template <typename T>
std::string show(T v) {
    return std::to_string(v);
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field via(std::string section, std::string key, std::function<T&(PipelineConfig&)> ref) {
    const std::string name = section + "." + key;
    return {std::move(section), std::move(key),
            [ref, name](PipelineConfig& c, const std::string& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    ref(c) = parse_bool(name, v);
                } else {
                    ref(c) = parse_value<T>(name, v);
                }
            },
            [ref](const PipelineConfig& c) { return show(ref(const_cast<PipelineConfig&>(c))); }};
}

#define MUVINE_FIELD(T, section, key, expr) via<T>(section, key, [](PipelineConfig& c) -> T& { return expr; })

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(MUVINE_FIELD(std::uint64_t, "general", "seed", c.seed));

        f.push_back(MUVINE_FIELD(int, "workload", "sn_count", c.workload.sn_count));
        f.push_back(MUVINE_FIELD(double, "workload", "link_prob", c.workload.link_prob));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_cpu_min", c.workload.sn_cpu.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_cpu_max", c.workload.sn_cpu.hi));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_mem_min", c.workload.sn_mem.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_mem_max", c.workload.sn_mem.hi));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_bw_min", c.workload.sn_bw.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_bw_max", c.workload.sn_bw.hi));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_clock_min", c.workload.sn_clock.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "sn_clock_max", c.workload.sn_clock.hi));
        f.push_back(MUVINE_FIELD(double, "workload", "kind_share_cpu", c.workload.kind_share_cpu));
        f.push_back(MUVINE_FIELD(double, "workload", "kind_share_gpu", c.workload.kind_share_gpu));
        f.push_back(MUVINE_FIELD(double, "workload", "kind_share_mem", c.workload.kind_share_mem));
        f.push_back(MUVINE_FIELD(int, "workload", "vn_count", c.workload.vn_count));
        f.push_back(MUVINE_FIELD(int, "workload", "vms_per_vn_min", c.workload.vms_per_vn.lo));
        f.push_back(MUVINE_FIELD(int, "workload", "vms_per_vn_max", c.workload.vms_per_vn.hi));
        f.push_back(MUVINE_FIELD(double, "workload", "vlink_prob", c.workload.vlink_prob));
        f.push_back(MUVINE_FIELD(Units, "workload", "vm_cpu_min", c.workload.vm_cpu.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "vm_cpu_max", c.workload.vm_cpu.hi));
        f.push_back(MUVINE_FIELD(Units, "workload", "vm_mem_min", c.workload.vm_mem.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "vm_mem_max", c.workload.vm_mem.hi));
        f.push_back(MUVINE_FIELD(Units, "workload", "vlink_bw_min", c.workload.vlink_bw.lo));
        f.push_back(MUVINE_FIELD(Units, "workload", "vlink_bw_max", c.workload.vlink_bw.hi));
        f.push_back(MUVINE_FIELD(double, "workload", "profile_share_cpu", c.workload.profile_share_cpu));
        f.push_back(MUVINE_FIELD(double, "workload", "profile_share_gpu", c.workload.profile_share_gpu));
        f.push_back(MUVINE_FIELD(double, "workload", "profile_share_mem", c.workload.profile_share_mem));
        f.push_back(MUVINE_FIELD(double, "workload", "arrivals_per_100", c.workload.arrivals_per_100));
        f.push_back(MUVINE_FIELD(double, "workload", "lifetime_mean", c.workload.lifetime_mean));
        f.push_back(MUVINE_FIELD(double, "workload", "vm_usage_min", c.workload.vm_usage.lo));
        f.push_back(MUVINE_FIELD(double, "workload", "vm_usage_max", c.workload.vm_usage.hi));
        f.push_back(MUVINE_FIELD(double, "workload", "unexpired_fraction", c.workload.unexpired_fraction));
        f.push_back(MUVINE_FIELD(int, "workload", "connect_retries", c.workload.connect_retries));

        f.push_back(MUVINE_FIELD(double, "pipeline", "train_ratio", c.train_ratio));
        f.push_back(MUVINE_FIELD(bool, "pipeline", "admission", c.admission_enabled));
        f.push_back(MUVINE_FIELD(bool, "pipeline", "classifier", c.classifier_enabled));
        f.push_back(MUVINE_FIELD(bool, "pipeline", "scaled_allocation", c.scaled_allocation));
        f.push_back(MUVINE_FIELD(double, "pipeline", "alloc_safety", c.alloc_safety));
        f.push_back(MUVINE_FIELD(double, "pipeline", "alloc_floor", c.alloc_floor));
        f.push_back(MUVINE_FIELD(bool, "pipeline", "verify_embeddings", c.verify_embeddings));
        f.push_back({"pipeline", "baselines",
                     [](PipelineConfig& c, const std::string& v) {
                         c.baselines.clear();
                         std::stringstream ss(v);
                         std::string item;
                         while (std::getline(ss, item, ',')) {
                             if (!item.empty()) c.baselines.push_back(parse_baseline(item));
                         }
                     },
                     [](const PipelineConfig& c) {
                         std::string out;
                         for (auto b : c.baselines) out += (out.empty() ? "" : ",") + std::string(to_string(b));
                         return out;
                     }});

        f.push_back(MUVINE_FIELD(double, "svm", "lambda", c.svm.lambda));
        f.push_back(MUVINE_FIELD(int, "svm", "epochs", c.svm.epochs));

        f.push_back(MUVINE_FIELD(std::size_t, "rbr", "max_centers", c.rbr.max_centers));
        f.push_back({"rbr", "gamma",
                     [](PipelineConfig& c, const std::string& v) {
                         if (v == "median") {
                             c.rbr.gamma.reset();
                         } else {
                             c.rbr.gamma = parse_value<double>("rbr.gamma", v);
                         }
                     },
                     [](const PipelineConfig& c) { return c.rbr.gamma ? show(*c.rbr.gamma) : std::string("median"); }});

        f.push_back(MUVINE_FIELD(bool, "mlc", "equal_priors", c.mlc_equal_priors));

        f.push_back(MUVINE_FIELD(int, "sarsa", "q_levels", c.sarsa.q_levels));
        f.push_back(MUVINE_FIELD(int, "sarsa", "position_cap", c.sarsa.position_cap));
        f.push_back(MUVINE_FIELD(double, "sarsa", "alpha", c.sarsa.alpha));
        f.push_back(MUVINE_FIELD(double, "sarsa", "gamma", c.sarsa.gamma));
        f.push_back(MUVINE_FIELD(double, "sarsa", "epsilon_start", c.sarsa.epsilon_start));
        f.push_back(MUVINE_FIELD(double, "sarsa", "epsilon_decay", c.sarsa.epsilon_decay));
        f.push_back(MUVINE_FIELD(double, "sarsa", "epsilon_floor", c.sarsa.epsilon_floor));
        f.push_back(MUVINE_FIELD(bool, "sarsa", "penalize_type_mismatch", c.sarsa.penalize_type_mismatch));
        f.push_back(MUVINE_FIELD(double, "sarsa", "objective_blend", c.sarsa.objective_blend));
        f.push_back(MUVINE_FIELD(int, "sarsa", "passes", c.sarsa_passes));

        f.push_back(MUVINE_FIELD(double, "objective", "cpu", c.weights.cpu));
        f.push_back(MUVINE_FIELD(double, "objective", "mem", c.weights.mem));
        f.push_back(MUVINE_FIELD(double, "objective", "net", c.weights.net));

        f.push_back(MUVINE_FIELD(double, "output", "time_units_per_hour", c.time_units_per_hour));
        return f;
    }();
    return table;
}

#undef MUVINE_FIELD

}  // namespace

PipelineConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.message());
    }
    PipelineConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            const auto& table = fields();
            auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == table.end()) throw ConfigError("unknown config key " + section + "." + key);
            it->set(cfg, value.data());
        }
    }
    cfg.sarsa.weights = cfg.weights;
    cfg.validate();
    return cfg;
}

void apply_override(PipelineConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
        throw ConfigError("override must look like section.key=value: " + std::string(assignment));
    }
    const std::string section(assignment.substr(0, dot));
    const std::string key(assignment.substr(dot + 1, eq - dot - 1));
    const std::string value(assignment.substr(eq + 1));
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const Field& f) { return f.section == section && f.key == key; });
    if (it == table.end()) throw ConfigError("unknown config key " + section + "." + key);
    it->set(cfg, value);
    cfg.sarsa.weights = cfg.weights;
    cfg.validate();
}

PipelineConfig parse_config_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_config(in);
}

PipelineConfig load_config(const std::string& path) {
    if (path == "default") return PipelineConfig{};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

std::string config_to_ini(const PipelineConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out << '\n';
            section = f.section;
            out << '[' << section << "]\n";
        }
        out << f.key << " = " << f.get(cfg) << '\n';
    }
    return out.str();
}

}  // namespace muvine
