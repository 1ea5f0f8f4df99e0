#pragma once

#include "curvelab/curve_model.hpp"
#include "curvelab/portfolio.hpp"

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace curvelab::cli {

/// Model description loaded from a line-oriented `key = value` file.
///
///     # comment
///     name = exponential
///     exponent = 0 0 0    # m, Re, Im
///     exponent = 0 -1 0
///     params = 0.03, 0.02, -0.01
///     strict = true
struct ModelConfig {
    std::string name;
    std::vector<Exponent> exponents;
    std::optional<Params> params;
    bool strict = false;

    /// Throws DomainError naming the missing element when the exponents do
    /// not close under conjugation and prime.
    LinearModel model() const;
};

/// `source` prefixes error messages, which read "source:line:column: ...".
ModelConfig parse_model_config(std::istream& in, const std::string& source = "<config>");
ModelConfig load_model_config(const std::string& path);

/// Whitespace-separated `time amount` pairs, '#' comments, ascending times.
Bundle parse_bundle(std::istream& in, const std::string& source = "<bundle>");
Bundle load_bundle(const std::string& path);
void write_bundle(std::ostream& out, const Bundle& bundle, bool exact);

/// Comma-separated real list.
std::vector<double> parse_real_list(const std::string& text);

/// `start:stop:step`, inclusive of stop up to rounding.
std::vector<double> parse_grid(const std::string& text);

/// 12 significant digits, or the shortest round-trip form when `exact`.
std::string format_number(double value, bool exact);

/// Entry point of the `curvelab` tool. Returns the process exit code:
/// 0 success, 1 domain or validation error, 2 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace curvelab::cli
