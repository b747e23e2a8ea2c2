#pragma once

#include "muvine/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace muvine {

/// INI text with sections [general] [workload] [pipeline] [svm] [rbr] [mlc]
/// [sarsa] [objective] [output]. Keys not listed are rejected and missing
/// keys keep their defaults. Throws ConfigError.
PipelineConfig parse_config(std::istream& in);
PipelineConfig parse_config_text(std::string_view text);

/// `path` may be the literal "default" for the built-in defaults.
PipelineConfig load_config(const std::string& path);

/// Applies one `section.key=value` assignment, then revalidates.
void apply_override(PipelineConfig& cfg, std::string_view assignment);

/// Every key with its current value, in the layout parse_config accepts.
std::string config_to_ini(const PipelineConfig& cfg);

}  // namespace muvine
