#pragma once

#include "muvine/substrate.hpp"
#include "muvine/virtual_network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "muvine/rng.hpp"

namespace muvine {

template <typename T>
struct Range {
    T lo;
    T hi;

    [[nodiscard]] bool valid() const noexcept { return lo <= hi; }
    [[nodiscard]] bool contains(T v) const noexcept { return lo <= v && v <= hi; }
};

struct WorkloadConfig {
    std::uint64_t seed = 1;

    int sn_count = 100;
    double link_prob = 0.6;
    Range<Units> sn_cpu{16, 32};
    Range<Units> sn_mem{2000, 5000};
    Range<Units> sn_bw{1000, 10000};
    Range<Units> sn_clock{2000, 3600};
    /// Node kind shares (CpuRich, GpuRich, MemRich).
    double kind_share_cpu = 0.36;
    double kind_share_gpu = 0.18;
    double kind_share_mem = 0.46;

    int vn_count = 15000;
    Range<int> vms_per_vn{2, 10};
    double vlink_prob = 0.6;
    Range<Units> vm_cpu{1, 4};
    Range<Units> vm_mem{500, 4096};
    Range<Units> vlink_bw{100, 500};
    /// Latent VM profile shares (CPU-, GPU-, memory-heavy).
    double profile_share_cpu = 0.36;
    double profile_share_gpu = 0.18;
    double profile_share_mem = 0.46;

    double arrivals_per_100 = 5.0;
    double lifetime_mean = 500.0;
    Range<double> vm_usage{0.30, 0.99};
    double unexpired_fraction = 0.05;
    int connect_retries = 200;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
};

SubstrateNetwork generate_substrate(const WorkloadConfig& cfg);

/// VNs in arrival order. Every VM carries its post-hoc usage and GPU affinity;
/// unexpired requests end after the last arrival.
std::vector<VnRequest> generate_vn_stream(const WorkloadConfig& cfg);

/// Time of the last arrival; requests ending later are unexpired.
double stream_horizon(std::span<const VnRequest> stream);

/// Dominant-resource type of a VM. Same order as NodeKind.
enum class VmType { Cpu = 0, Gpu = 1, Mem = 2 };

inline constexpr int kVmTypeCount = 3;

std::string_view to_string(VmType t);
VmType parse_vm_type(std::string_view text);
inline NodeKind matching_kind(VmType t) noexcept { return static_cast<NodeKind>(static_cast<int>(t)); }

/// Argmax of the normalized usages; ties go Cpu, then Mem, then Gpu.
VmType dominant_type(double cpu_share, double mem_share, double gpu_share) noexcept;

/// Type label of a generated VM: usage normalized by the configured VM maxima.
/// Throws std::invalid_argument when the VM has no observed usage.
VmType vm_type_label(const VirtualMachine& vm, const WorkloadConfig& cfg);

struct TraceRecord {
    VnRequest vn;
    bool accepted = false;
    std::vector<VmType> vm_types;  // one per VM
};

/// Attach the reference CSP outcome and per-VM type labels. `outcomes[k]`
/// belongs to `stream[k]`; a missing outcome or VM usage throws
/// std::invalid_argument.
std::vector<TraceRecord> label_trace(std::span<const VnRequest> stream,
                                     std::span<const std::optional<bool>> outcomes, const WorkloadConfig& cfg);

/// Seeded shuffle, first floor(n * ratio) items train. Throws on empty input.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_test(std::vector<T> items, double ratio, std::uint64_t seed) {
    if (items.empty()) throw std::invalid_argument("cannot split an empty trace");
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("split ratio must lie in [0,1]");
    Rng rng(seed);
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(items[i], items[pick(rng)]);
    }
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(items.size()) * ratio + 1e-9));
    std::vector<T> test(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(n_train)),
                        std::make_move_iterator(items.end()));
    items.resize(n_train);
    return {std::move(items), std::move(test)};
}

/// One CSV row per VM.
struct TraceRow {
    int vn_id = 0;
    int vm_id = 0;
    Units cpu_demand = 0;
    Units mem_demand = 0;
    int vm_class = 3;
    int priority = 1;
    double start = 0.0;
    double end = 0.0;
    double actual_cpu = 0.0;
    double actual_mem = 0.0;
    bool vn_accepted = false;
    VmType vm_type = VmType::Cpu;
};

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace);
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// Rebuild labeled records from a VN stream (structure) and trace rows
/// (outcomes). Throws FormatError when the two disagree.
std::vector<TraceRecord> join_trace(std::span<const VnRequest> stream, std::span<const TraceRow> rows);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;  // two-sided
};

/// Welch's two-sample t-test. Each sample needs at least two values.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace muvine
