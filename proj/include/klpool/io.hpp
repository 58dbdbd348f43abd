#pragma once

// File formats used by the command-line tool.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "klpool/distribution.hpp"
#include "klpool/ebayes.hpp"

namespace klpool::io {

/// 12 significant digits, the precision of every CSV number we write.
std::string format_number(double x);

/// One probability per line. Blank lines and lines starting with '#' are
/// skipped. Throws InputError naming the offending line.
std::vector<double> read_probabilities(const std::filesystem::path& path);

struct ExpressionCsv {
  ebayes::ExpressionMatrix matrix;
  /// Genes dropped because a replicate was missing (empty or NA).
  std::size_t dropped_incomplete = 0;
};

/// Header row of replicate names after a gene-id column, then one gene per
/// row. Genes with a missing replicate are dropped.
ExpressionCsv read_expression_csv(const std::filesystem::path& path);
void write_expression_csv(const std::filesystem::path& path, const ebayes::ExpressionMatrix& x);

/// A family of distributions given as JSON:
///   {"type": "finite" | "bernoulli_product", "members": [[...], ...]}
/// A bare array of arrays means "finite".
struct FamilyJson {
  bool product = false;
  std::vector<FiniteDistribution> finite;
  std::vector<BernoulliProduct> products;
};

FamilyJson parse_family(const nlohmann::json& doc);
FamilyJson read_family(const std::filesystem::path& path);

/// Writes text to path, or to stdout when path is empty or "-".
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace klpool::io
