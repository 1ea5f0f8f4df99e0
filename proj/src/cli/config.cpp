#include "curvelab/cli.hpp"

#include "curvelab/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace curvelab::cli {

namespace {

struct Token {
    std::string text;
    std::size_t column = 0; // 1-based
};

std::vector<Token> split_tokens(const std::string& line, std::size_t offset, const std::string& separators)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && separators.find(line[i]) != std::string::npos) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && separators.find(line[i]) == std::string::npos) {
            ++i;
        }
        if (i > start) {
            out.push_back({line.substr(start, i - start), offset + start + 1});
        }
    }
    return out;
}

std::string where(const std::string& source, std::size_t line, std::size_t column)
{
    return source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": ";
}

template <typename T>
T parse_number(const Token& token, const std::string& source, std::size_t line, const char* what)
{
    T value{};
    const char* first = token.text.data();
    const char* last = first + token.text.size();
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw DomainError(where(source, line, token.column) + "expected " + what + ", got '" +
                          token.text + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            throw DomainError(where(source, line, token.column) + "non-finite " + what);
        }
    }
    return value;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::ifstream open_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open " + path);
    }
    return in;
}

} // namespace

LinearModel ModelConfig::model() const
{
    const ExponentSet set(exponents);
    const auto missing = missing_for_closure(set);
    if (!missing.empty()) {
        throw DomainError("model '" + name + "' is not closed: missing exponent " +
                          to_string(missing.front()));
    }
    LinearModel m(set);
    if (params) {
        m.check_dimension(*params);
        if (strict && !in_positive_domain(m, *params, true)) {
            throw DomainError("model '" + name + "': parameters are outside the strict positive domain");
        }
    }
    return m;
}

ModelConfig parse_model_config(std::istream& in, const std::string& source)
{
    ModelConfig config;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DomainError(where(source, number, first + 1) + "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string rest = line.substr(eq + 1);
        if (key == "name") {
            config.name = trim(rest);
        } else if (key == "exponent") {
            const auto tokens = split_tokens(rest, eq + 1, " \t\r");
            if (tokens.size() != 3) {
                throw DomainError(where(source, number, eq + 2) +
                                  "exponent needs three fields 'm re im', got " +
                                  std::to_string(tokens.size()));
            }
            const int m = parse_number<int>(tokens[0], source, number, "integer degree m");
            const double re = parse_number<double>(tokens[1], source, number, "real part");
            const double im = parse_number<double>(tokens[2], source, number, "imaginary part");
            if (m < 0) {
                throw DomainError(where(source, number, tokens[0].column) + "degree m must be >= 0");
            }
            config.exponents.emplace_back(m, re, im);
        } else if (key == "params") {
            const auto tokens = split_tokens(rest, eq + 1, ", \t\r");
            Params p(static_cast<Eigen::Index>(tokens.size()));
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                p[static_cast<Eigen::Index>(i)] = parse_number<double>(tokens[i], source, number, "real number");
            }
            config.params = std::move(p);
        } else if (key == "strict") {
            const std::string v = trim(rest);
            if (v != "true" && v != "false") {
                throw DomainError(where(source, number, eq + 2) + "strict must be true or false");
            }
            config.strict = v == "true";
        } else {
            throw DomainError(where(source, number, first + 1) + "unknown key '" + key + "'");
        }
    }
    if (config.exponents.empty()) {
        throw DomainError(source + ": no exponent entries");
    }
    return config;
}

ModelConfig load_model_config(const std::string& path)
{
    auto in = open_file(path);
    return parse_model_config(in, path);
}

Bundle parse_bundle(std::istream& in, const std::string& source)
{
    std::vector<DatedAmount> entries;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const auto tokens = split_tokens(line, 0, " \t\r");
        if (tokens.empty()) {
            continue;
        }
        if (tokens.size() != 2) {
            throw DomainError(where(source, number, tokens.front().column) +
                              "expected 'time amount', got " + std::to_string(tokens.size()) + " fields");
        }
        const double t = parse_number<double>(tokens[0], source, number, "time");
        const double a = parse_number<double>(tokens[1], source, number, "amount");
        if (t <= 0.0) {
            throw DomainError(where(source, number, tokens[0].column) + "time must be positive");
        }
        if (!entries.empty() && t <= entries.back().time) {
            throw DomainError(where(source, number, tokens[0].column) + "times must be strictly ascending");
        }
        entries.push_back({t, a});
    }
    return Bundle(std::move(entries));
}

Bundle load_bundle(const std::string& path)
{
    auto in = open_file(path);
    return parse_bundle(in, path);
}

void write_bundle(std::ostream& out, const Bundle& bundle, bool exact)
{
    out << "# time amount\n";
    for (const auto& e : bundle) {
        out << format_number(e.time, exact) << ' ' << format_number(e.amount, exact) << '\n';
    }
}

std::vector<double> parse_real_list(const std::string& text)
{
    std::vector<double> out;
    for (const auto& token : split_tokens(text, 0, ", \t")) {
        out.push_back(parse_number<double>(token, "<list>", 1, "real number"));
    }
    return out;
}

std::vector<double> parse_grid(const std::string& text)
{
    const auto tokens = split_tokens(text, 0, ":");
    if (tokens.size() != 3) {
        throw DomainError("grid must be start:stop:step, got '" + text + "'");
    }
    const double start = parse_number<double>(tokens[0], "<grid>", 1, "start");
    const double stop = parse_number<double>(tokens[1], "<grid>", 1, "stop");
    const double step = parse_number<double>(tokens[2], "<grid>", 1, "step");
    if (!(step > 0.0) || stop < start) {
        throw DomainError("grid needs step > 0 and stop >= start");
    }
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 10'000'000) {
        throw DomainError("grid has too many points");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        out.push_back(start + static_cast<double>(i) * step);
    }
    return out;
}

std::string format_number(double value, bool exact)
{
    char buf[64];
    const auto result = exact ? std::to_chars(buf, buf + sizeof buf, value)
                              : std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
    std::string s(buf, result.ptr);
    return s == "-0" ? "0" : s;
}

} // namespace curvelab::cli
