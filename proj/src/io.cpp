#include "klpool/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "klpool/errors.hpp"

namespace klpool::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::vector<double> read_probabilities(const std::filesystem::path& path) {
  std::ifstream in = open(path);
  std::vector<double> probs;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    double p = 0.0;
    if (!parse_double(t, p)) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": not a number: '" + t + "'");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": probability " + t +
                       " outside [0,1]");
    }
    probs.push_back(p);
  }
  if (probs.empty()) throw InputError(path.string() + ": no probabilities");
  return probs;
}

ExpressionCsv read_expression_csv(const std::filesystem::path& path) {
  std::ifstream in = open(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  std::vector<std::string> header = split_csv(line);
  if (header.size() < 3) {
    throw InputError(path.string() + ":1: need a gene-id column and at least 2 replicates");
  }
  std::vector<std::string> reps(header.begin() + 1, header.end());
  std::vector<std::string> ids;
  std::vector<double> values;
  std::size_t dropped = 0;
  for (std::size_t number = 2; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw InputError(path.string() + ":" + std::to_string(number) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row;
    bool missing = false;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      if (fields[k].empty() || fields[k] == "NA" || fields[k] == "NaN") {
        missing = true;
        continue;
      }
      double v = 0.0;
      if (!parse_double(fields[k], v)) {
        throw InputError(path.string() + ":" + std::to_string(number) + ": not a number: '" +
                         fields[k] + "'");
      }
      row.push_back(v);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    ids.push_back(fields[0]);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (ids.empty()) throw InputError(path.string() + ": no complete genes");
  return {ebayes::ExpressionMatrix(std::move(ids), std::move(reps), std::move(values)), dropped};
}

void write_expression_csv(const std::filesystem::path& path, const ebayes::ExpressionMatrix& x) {
  std::ostringstream out;
  out << "gene_id";
  for (const auto& r : x.replicate_names()) out << ',' << r;
  out << '\n';
  for (std::size_t j = 0; j < x.genes(); ++j) {
    out << x.gene_ids()[j];
    for (double v : x.row(j)) out << ',' << format_number(v);
    out << '\n';
  }
  write_text(path, out.str());
}

FamilyJson parse_family(const nlohmann::json& doc) {
  FamilyJson family;
  const nlohmann::json* members = &doc;
  if (doc.is_object()) {
    const std::string type = doc.value("type", std::string("finite"));
    if (type == "bernoulli_product") {
      family.product = true;
    } else if (type != "finite") {
      throw InputError("unknown family type '" + type + "'");
    }
    if (!doc.contains("members")) throw InputError("family JSON lacks 'members'");
    members = &doc.at("members");
  }
  if (!members->is_array() || members->empty()) throw InputError("'members' must be a nonempty array");
  try {
    for (const auto& m : *members) {
      auto v = m.get<std::vector<double>>();
      if (family.product) {
        family.products.emplace_back(std::move(v));
      } else {
        family.finite.emplace_back(std::move(v));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("family member is not an array of numbers: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  return family;
}

FamilyJson read_family(const std::filesystem::path& path) {
  std::ifstream in = open(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_family(doc);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace klpool::io
