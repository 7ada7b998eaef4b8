// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "critmode/design.hpp"
#include "critmode/jordan.hpp"

namespace critmode::io {

using nlohmann::json;

/// %.17g. All numeric text output goes through this.
std::string format_real(double v);

/// Comma-joined format_real values, no trailing newline.
std::string csv_row(std::span<const double> values);

/// {"N": int, "K": [[...]], "Gamma": [[...]], "label": optional}. Throws ParseError.
OscillatorSystem parse_system_json(std::string_view text);
json system_to_json(const OscillatorSystem& sys);

/// `catalog:<name>` or a path to a system JSON file.
OscillatorSystem load_system(const std::string& source);

/// Blocks with omega, M, chain and duals as interleaved re/im arrays, plus the
/// normalization ledger.
json spectrum_to_json(const Spectrum& spectrum);

/// Exact fixtures of a catalog entry: numerator/denominator with surd and phase tags.
json fixtures_to_json(const CatalogEntry& entry);

/// Applies {"rank_tol", "cluster_tol", "residual_tol"} keys found in `text`.
/// Unknown keys are a ParseError.
ToleranceConfig apply_tolerance_override(ToleranceConfig base, std::string_view text);

std::string read_file(const std::string& path);
/// Creates parent directories as needed.
void write_file(const std::string& path, std::string_view content);

}  // namespace critmode::io
