#include "muvine/workload.hpp"

#include "muvine/error.hpp"
#include "muvine/io_util.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <array>
#include <charconv>
#include <limits>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace muvine {

namespace {

template <typename T>
void require_range(const Range<T>& r, const char* name, T min_lo) {
    if (!r.valid() || r.lo < min_lo) throw ConfigError(std::string("invalid range for ") + name);
}

void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
}

void require_shares(double a, double b, double c, const char* name) {
    if (!(a >= 0.0 && b >= 0.0 && c >= 0.0) || std::abs(a + b + c - 1.0) > 1e-9) {
        throw ConfigError(std::string(name) + " shares must be non-negative and sum to 1");
    }
}

Units uniform_units(Rng& rng, Units lo, Units hi) { return std::uniform_int_distribution<Units>(lo, hi)(rng); }

double uniform_real(Rng& rng, double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Sub-range of `r` between the fractions `from` and `to` of its width.
Range<Units> slice(const Range<Units>& r, double from, double to) {
    const double width = static_cast<double>(r.hi - r.lo);
    const auto lo = r.lo + static_cast<Units>(std::ceil(width * from - 1e-9));
    const auto hi = r.lo + static_cast<Units>(std::floor(width * to + 1e-9));
    return {lo, std::max(lo, hi)};
}

}  // namespace

void WorkloadConfig::validate() const {
    if (sn_count < 1) throw ConfigError("sn_count must be at least 1");
    require_probability(link_prob, "link_prob");
    require_range(sn_cpu, "sn_cpu", Units{1});
    require_range(sn_mem, "sn_mem", Units{1});
    require_range(sn_bw, "sn_bw", Units{1});
    require_range(sn_clock, "sn_clock", Units{0});
    require_shares(kind_share_cpu, kind_share_gpu, kind_share_mem, "node kind");
    if (vn_count < 0) throw ConfigError("vn_count must be non-negative");
    require_range(vms_per_vn, "vms_per_vn", 1);
    require_probability(vlink_prob, "vlink_prob");
    require_range(vm_cpu, "vm_cpu", Units{1});
    require_range(vm_mem, "vm_mem", Units{1});
    require_range(vlink_bw, "vlink_bw", Units{1});
    require_shares(profile_share_cpu, profile_share_gpu, profile_share_mem, "VM profile");
    if (!(arrivals_per_100 > 0.0)) throw ConfigError("arrivals_per_100 must be positive");
    if (!(lifetime_mean > 0.0)) throw ConfigError("lifetime_mean must be positive");
    if (!vm_usage.valid() || vm_usage.lo <= 0.0 || vm_usage.hi > 1.0) {
        throw ConfigError("vm_usage must be a sub-range of (0,1]");
    }
    require_probability(unexpired_fraction, "unexpired_fraction");
    if (connect_retries < 1) throw ConfigError("connect_retries must be at least 1");
}

SubstrateNetwork generate_substrate(const WorkloadConfig& cfg) {
    cfg.validate();
    Rng rng(sub_seed(cfg.seed, "substrate"));
    std::discrete_distribution<int> kind_dist({cfg.kind_share_cpu, cfg.kind_share_gpu, cfg.kind_share_mem});
    std::bernoulli_distribution edge(cfg.link_prob);

    for (int attempt = 0; attempt < cfg.connect_retries; ++attempt) {
        SubstrateNetwork net;
        for (int i = 0; i < cfg.sn_count; ++i) {
            const auto kind = static_cast<NodeKind>(kind_dist(rng));
            // Rich kinds draw their strong resource from the upper half of the
            // configured range and the other one from the lower half.
            Range<Units> cpu = cfg.sn_cpu;
            Range<Units> mem = cfg.sn_mem;
            if (kind == NodeKind::CpuRich) {
                cpu = slice(cfg.sn_cpu, 0.5, 1.0);
                mem = slice(cfg.sn_mem, 0.0, 0.5);
            } else if (kind == NodeKind::MemRich) {
                cpu = slice(cfg.sn_cpu, 0.0, 0.5);
                mem = slice(cfg.sn_mem, 0.5, 1.0);
            }
            const Units c = uniform_units(rng, cpu.lo, cpu.hi);
            const Units m = uniform_units(rng, mem.lo, mem.hi);
            const Units clock = uniform_units(rng, cfg.sn_clock.lo, cfg.sn_clock.hi);
            net.add_node(c, m, clock, kind);
        }
        for (int i = 0; i < cfg.sn_count; ++i) {
            for (int j = i + 1; j < cfg.sn_count; ++j) {
                if (edge(rng)) net.add_link(i, j, uniform_units(rng, cfg.sn_bw.lo, cfg.sn_bw.hi));
            }
        }
        if (net.is_connected()) return net;
    }
    throw GenerationError("no connected substrate after " + std::to_string(cfg.connect_retries) + " draws");
}

std::vector<VnRequest> generate_vn_stream(const WorkloadConfig& cfg) {
    cfg.validate();
    Rng rng(sub_seed(cfg.seed, "vn_stream"));
    std::exponential_distribution<double> gap(cfg.arrivals_per_100 / 100.0);
    std::exponential_distribution<double> lifetime(1.0 / cfg.lifetime_mean);
    std::bernoulli_distribution unexpired(cfg.unexpired_fraction);
    std::bernoulli_distribution vlink(cfg.vlink_prob);
    std::discrete_distribution<int> profile_dist(
        {cfg.profile_share_cpu, cfg.profile_share_gpu, cfg.profile_share_mem});
    std::uniform_int_distribution<int> class_dist(1, 3);
    std::uniform_int_distribution<int> size_dist(cfg.vms_per_vn.lo, cfg.vms_per_vn.hi);

    const double usage_split = 0.5 * (cfg.vm_usage.lo + cfg.vm_usage.hi);
    const Range<double> low_usage{cfg.vm_usage.lo, usage_split};
    const Range<double> high_usage{usage_split, cfg.vm_usage.hi};
    const std::array<Range<Units>, 3> cpu_by_profile{
        slice(cfg.vm_cpu, 0.5, 1.0), slice(cfg.vm_cpu, 0.0, 0.5), slice(cfg.vm_cpu, 0.0, 0.5)};
    const std::array<Range<Units>, 3> mem_by_profile{
        slice(cfg.vm_mem, 0.0, 0.5), slice(cfg.vm_mem, 0.0, 0.28), slice(cfg.vm_mem, 0.5, 1.0)};

    struct Draft {
        double start;
        double life;
        bool unexpired;
        std::vector<VirtualMachine> vms;
        std::vector<VirtualLink> vlinks;
    };
    std::vector<Draft> drafts;
    drafts.reserve(static_cast<std::size_t>(cfg.vn_count));
    double t = 0.0;
    for (int v = 0; v < cfg.vn_count; ++v) {
        Draft d;
        t += gap(rng);
        d.start = t;
        const int n = size_dist(rng);
        for (int j = 0; j < n; ++j) {
            const auto profile = static_cast<VmType>(profile_dist(rng));
            const auto p = static_cast<std::size_t>(profile);
            VirtualMachine vm;
            vm.id = j;
            vm.cpu_demand = uniform_units(rng, cpu_by_profile[p].lo, cpu_by_profile[p].hi);
            vm.mem_demand = uniform_units(rng, mem_by_profile[p].lo, mem_by_profile[p].hi);
            vm.vm_class = static_cast<VmClass>(class_dist(rng));
            vm.priority = priority_of(vm.vm_class);
            vm.start = t;
            const auto& cpu_use = profile == VmType::Cpu ? high_usage : low_usage;
            const auto& mem_use = profile == VmType::Mem ? high_usage : low_usage;
            vm.actual_cpu = static_cast<double>(vm.cpu_demand) * uniform_real(rng, cpu_use.lo, cpu_use.hi);
            vm.actual_mem = static_cast<double>(vm.mem_demand) * uniform_real(rng, mem_use.lo, mem_use.hi);
            vm.gpu_affinity = profile == VmType::Gpu ? uniform_real(rng, 0.7, 1.0) : uniform_real(rng, 0.0, 0.4);
            d.vms.push_back(vm);
        }
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                if (vlink(rng)) d.vlinks.push_back({a, b, uniform_units(rng, cfg.vlink_bw.lo, cfg.vlink_bw.hi)});
            }
        }
        d.life = lifetime(rng);
        d.unexpired = unexpired(rng);
        drafts.push_back(std::move(d));
    }

    const double horizon = t;
    std::vector<VnRequest> stream;
    stream.reserve(drafts.size());
    for (std::size_t v = 0; v < drafts.size(); ++v) {
        auto& d = drafts[v];
        const double end = d.unexpired ? horizon + d.life : d.start + d.life;
        for (auto& vm : d.vms) vm.end = end;
        stream.emplace_back(static_cast<int>(v), d.start, std::move(d.vms), std::move(d.vlinks), end);
    }
    return stream;
}

double stream_horizon(std::span<const VnRequest> stream) {
    double h = 0.0;
    for (const auto& vn : stream) h = std::max(h, vn.start());
    return h;
}

std::string_view to_string(VmType t) {
    switch (t) {
    case VmType::Cpu:
        return "CpuIntensive";
    case VmType::Gpu:
        return "GpuIntensive";
    case VmType::Mem:
        return "MemIntensive";
    }
    return "?";
}

VmType parse_vm_type(std::string_view text) {
    if (text == "CpuIntensive") return VmType::Cpu;
    if (text == "GpuIntensive") return VmType::Gpu;
    if (text == "MemIntensive") return VmType::Mem;
    throw FormatError("unknown VM type '" + std::string(text) + "'");
}

VmType dominant_type(double cpu_share, double mem_share, double gpu_share) noexcept {
    if (cpu_share >= mem_share && cpu_share >= gpu_share) return VmType::Cpu;
    if (mem_share >= gpu_share) return VmType::Mem;
    return VmType::Gpu;
}

VmType vm_type_label(const VirtualMachine& vm, const WorkloadConfig& cfg) {
    if (!vm.actual_cpu || !vm.actual_mem || !vm.gpu_affinity) {
        throw std::invalid_argument("VM " + std::to_string(vm.id) + " has no observed usage");
    }
    return dominant_type(*vm.actual_cpu / static_cast<double>(cfg.vm_cpu.hi),
                         *vm.actual_mem / static_cast<double>(cfg.vm_mem.hi), *vm.gpu_affinity);
}

std::vector<TraceRecord> label_trace(std::span<const VnRequest> stream,
                                     std::span<const std::optional<bool>> outcomes, const WorkloadConfig& cfg) {
    if (stream.size() != outcomes.size()) throw std::invalid_argument("one outcome per VN is required");
    std::vector<TraceRecord> out;
    out.reserve(stream.size());
    for (std::size_t k = 0; k < stream.size(); ++k) {
        if (!outcomes[k]) throw std::invalid_argument("VN " + std::to_string(stream[k].id()) + " has no outcome");
        if (!stream[k].end()) throw std::invalid_argument("VN " + std::to_string(stream[k].id()) + " has no end time");
        TraceRecord rec{stream[k], *outcomes[k], {}};
        for (const auto& vm : stream[k].vms()) rec.vm_types.push_back(vm_type_label(vm, cfg));
        out.push_back(std::move(rec));
    }
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) {
    out << "vn_id,vm_id,cpu_demand,mem_demand,vm_class,priority,start,end,actual_cpu,actual_mem,vn_label,vm_type\n";
    for (const auto& rec : trace) {
        const auto& vn = rec.vn;
        for (const auto& vm : vn.vms()) {
            out << vn.id() << ',' << vm.id << ',' << vm.cpu_demand << ',' << vm.mem_demand << ','
                << static_cast<int>(vm.vm_class) << ',' << vm.priority << ',' << io::format_double(vn.start()) << ','
                << io::format_double(vn.end().value_or(vn.start())) << ','
                << io::format_double(vm.actual_cpu.value_or(0.0)) << ','
                << io::format_double(vm.actual_mem.value_or(0.0)) << ','
                << (rec.accepted ? "accepted" : "rejected") << ','
                << to_string(rec.vm_types.at(static_cast<std::size_t>(vm.id))) << '\n';
        }
    }
}

namespace {

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw FormatError("trace line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    static constexpr std::string_view kHeader =
        "vn_id,vm_id,cpu_demand,mem_demand,vm_class,priority,start,end,actual_cpu,actual_mem,vn_label,vm_type";
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw FormatError("trace CSV header missing or wrong");
    std::vector<TraceRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != 12) throw FormatError("trace line " + std::to_string(line_no) + ": expected 12 fields");
        TraceRow r;
        r.vn_id = parse_number<int>(f[0], line_no);
        r.vm_id = parse_number<int>(f[1], line_no);
        r.cpu_demand = parse_number<Units>(f[2], line_no);
        r.mem_demand = parse_number<Units>(f[3], line_no);
        r.vm_class = parse_number<int>(f[4], line_no);
        r.priority = parse_number<int>(f[5], line_no);
        r.start = parse_number<double>(f[6], line_no);
        r.end = parse_number<double>(f[7], line_no);
        r.actual_cpu = parse_number<double>(f[8], line_no);
        r.actual_mem = parse_number<double>(f[9], line_no);
        if (f[10] == "accepted") {
            r.vn_accepted = true;
        } else if (f[10] != "rejected") {
            throw FormatError("trace line " + std::to_string(line_no) + ": bad label '" + std::string(f[10]) + "'");
        }
        r.vm_type = parse_vm_type(f[11]);
        rows.push_back(r);
    }
    return rows;
}

std::vector<TraceRecord> join_trace(std::span<const VnRequest> stream, std::span<const TraceRow> rows) {
    std::map<std::pair<int, int>, const TraceRow*> by_key;
    for (const auto& r : rows) {
        if (!by_key.emplace(std::pair{r.vn_id, r.vm_id}, &r).second) {
            throw FormatError("duplicate trace row for vn " + std::to_string(r.vn_id) + " vm " +
                              std::to_string(r.vm_id));
        }
    }
    std::size_t used = 0;
    std::vector<TraceRecord> out;
    out.reserve(stream.size());
    for (const auto& vn : stream) {
        std::vector<VirtualMachine> vms;
        std::vector<VmType> types;
        std::optional<bool> accepted;
        double end = vn.start();
        for (const auto& base : vn.vms()) {
            auto it = by_key.find({vn.id(), base.id});
            if (it == by_key.end()) {
                throw FormatError("no trace row for vn " + std::to_string(vn.id()) + " vm " + std::to_string(base.id));
            }
            const TraceRow& r = *it->second;
            if (r.cpu_demand != base.cpu_demand || r.mem_demand != base.mem_demand ||
                r.vm_class != static_cast<int>(base.vm_class)) {
                throw FormatError("trace row disagrees with VN stream for vn " + std::to_string(vn.id()));
            }
            if (accepted && *accepted != r.vn_accepted) {
                throw FormatError("inconsistent VN label for vn " + std::to_string(vn.id()));
            }
            accepted = r.vn_accepted;
            end = r.end;
            VirtualMachine vm = base;
            vm.priority = r.priority;
            vm.start = r.start;
            vm.end = r.end;
            vm.actual_cpu = r.actual_cpu;
            vm.actual_mem = r.actual_mem;
            vms.push_back(vm);
            types.push_back(r.vm_type);
            ++used;
        }
        try {
            TraceRecord rec{VnRequest(vn.id(), vn.start(), std::move(vms), vn.vlinks(), end), accepted.value_or(false),
                            std::move(types)};
            out.push_back(std::move(rec));
        } catch (const std::invalid_argument& e) {
            throw FormatError("vn " + std::to_string(vn.id()) + ": " + e.what());
        }
    }
    if (used != rows.size()) throw FormatError("trace has rows for VMs missing from the VN stream");
    return out;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("t-test needs at least two values per sample");
    auto moments = [](std::span<const double> x) {
        const double n = static_cast<double>(x.size());
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        return std::pair{mean, ss / (n - 1.0)};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    TTestResult r;
    if (se2 == 0.0) {
        r.t = ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
        r.df = na + nb - 2.0;
        r.p_value = ma == mb ? 1.0 : 0.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    const boost::math::students_t dist(r.df);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

}  // namespace muvine
