#pragma once

// Experiment configuration: flat `key = value` text, one pair per line, `#`
// starts a comment. Lists (vectors, row-major matrices, radii) are separated
// by commas, semicolons or blanks. Unknown and repeated keys are rejected.

#include "levyou/core.hpp"
#include "levyou/levy.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace levyou::harness {

/// Invalid configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class Command { simulate, decompose, girsanov_check, recover_drift, distinctness, skorohod, convergence_probe };

inline constexpr std::array<std::pair<Command, std::string_view>, 7> kCommands{{
    {Command::simulate, "simulate"},
    {Command::decompose, "decompose"},
    {Command::girsanov_check, "girsanov-check"},
    {Command::recover_drift, "recover-drift"},
    {Command::distinctness, "distinctness"},
    {Command::skorohod, "skorohod"},
    {Command::convergence_probe, "convergence-probe"},
}};

inline std::string_view to_string(Command c) {
    for (const auto& [cmd, name] : kCommands) {
        if (cmd == c) return name;
    }
    return "?";
}

inline std::optional<Command> parse_command(std::string_view name) {
    for (const auto& [cmd, text] : kCommands) {
        if (text == name) return cmd;
    }
    return std::nullopt;
}

struct KeySpec {
    std::string_view name;
    std::string_view help;
};

inline constexpr std::array<KeySpec, 34> kConfigKeys{{
    {"command", "simulate | decompose | girsanov-check | recover-drift | distinctness | skorohod | convergence-probe"},
    {"dimension", "state dimension d (default 1)"},
    {"horizon", "time horizon T (default 1)"},
    {"step", "grid step h (default 1e-3)"},
    {"a", "drift operator A, d*d entries row-major (default 0)"},
    {"a_tilde", "alternative drift operator, d*d entries row-major (default 0)"},
    {"drift", "Levy drift b, d entries (default 0)"},
    {"q", "Wiener covariance Q, d*d entries row-major (default 0)"},
    {"rate", "compound Poisson rate lambda (default 0)"},
    {"jump_law", "none | gaussian | discrete (default none)"},
    {"jump_scale", "standard deviation of gaussian jump sizes (default 1)"},
    {"jump_atoms", "discrete jump atoms, k*d entries"},
    {"jump_weights", "discrete jump weights, k entries (default uniform)"},
    {"small_jumps", "none | power (default none)"},
    {"small_coefficient", "power family coefficient c (default 1)"},
    {"small_alpha", "power family index alpha in (0, 2) (default 0.5)"},
    {"small_epsilon", "simulation truncation of the power family (default 0.01)"},
    {"small_one_sided", "true | false, d = 1 only (default false)"},
    {"replicas", "number of replicas N >= 1 (default 100)"},
    {"seed", "master seed (default 1)"},
    {"sigma_tol", "Gram singular value tolerance, 0 = 1e-10 * samples (default 0)"},
    {"tau", "distinctness residual threshold (default 0.01)"},
    {"se_multiplier", "standard-error multiplier k (default 3)"},
    {"drift_tol", "accepted |A_hat - A| in recover-drift (default 1e-6)"},
    {"probe_radii", "shell radii for convergence-probe (default 0.5, 0.25, 0.125)"},
    {"probe_time", "time t of the convergence probe (default 1)"},
    {"probe_tol", "accepted relative variance error (default 0.1)"},
    {"refine", "girsanov-check also at h/2 (default true)"},
    {"expect_verdict", "expected distinctness verdict (default DISTINCT)"},
    {"expect_equivalence", "expected equivalence condition (default true)"},
    {"input", "input path file (decompose, recover-drift, skorohod)"},
    {"input_b", "second input path file (skorohod)"},
    {"write_paths", "simulate/decompose write path files (default true)"},
    {"out", "output directory (default results)"},
}};

inline bool is_known_key(std::string_view key) {
    return std::any_of(kConfigKeys.begin(), kConfigKeys.end(), [&](const KeySpec& k) { return k.name == key; });
}

using RawConfig = std::map<std::string, std::string, std::less<>>;

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Adds or replaces one key. Unknown keys are rejected.
inline void set_key(RawConfig& raw, std::string_view key, std::string_view value) {
    const std::string name(detail::trim(key));
    if (!is_known_key(name)) throw ConfigError(name, "unknown configuration key");
    raw[name] = std::string(detail::trim(value));
}

inline RawConfig parse_key_values(std::istream& in) {
    RawConfig raw;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "line " + std::to_string(number) + ": expected key = value");
        }
        const std::string key(detail::trim(view.substr(0, eq)));
        if (!is_known_key(key)) {
            throw ConfigError(key, "line " + std::to_string(number) + ": unknown configuration key");
        }
        if (raw.contains(key)) throw ConfigError(key, "line " + std::to_string(number) + ": repeated key");
        raw[key] = std::string(detail::trim(view.substr(eq + 1)));
    }
    return raw;
}

inline RawConfig parse_key_values(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

struct ExperimentConfig {
    Command command = Command::simulate;
    int dimension = 1;
    double horizon = 1.0;
    double step = 1e-3;
    Matrix a;
    Matrix a_tilde;
    Vector drift;
    Matrix q;
    double rate = 0.0;
    std::string jump_law = "none";
    double jump_scale = 1.0;
    std::vector<double> jump_atoms;
    std::vector<double> jump_weights;
    std::string small_jumps = "none";
    double small_coefficient = 1.0;
    double small_alpha = 0.5;
    double small_epsilon = 0.01;
    bool small_one_sided = false;
    std::size_t replicas = 100;
    std::uint64_t seed = 1;
    double sigma_tol = 0.0;
    double tau = 0.01;
    double se_multiplier = 3.0;
    double drift_tol = 1e-6;
    std::vector<double> probe_radii{0.5, 0.25, 0.125};
    double probe_time = 1.0;
    double probe_tol = 0.1;
    bool refine = true;
    std::string expect_verdict = "DISTINCT";
    bool expect_equivalence = true;
    std::string input;
    std::string input_b;
    bool write_paths = true;
    std::string out = "results";

    [[nodiscard]] JumpSpec jump_spec() const;
    [[nodiscard]] LevyTriplet triplet() const;
};

namespace detail {

inline double number(const std::string& field, std::string_view text) {
    double value = 0.0;
    try {
        value = parse_double(text);
    } catch (const FormatError&) {
        throw ConfigError(field, "not a number: '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) throw ConfigError(field, "must be finite");
    return value;
}

inline std::vector<double> numbers(const std::string& field, std::string_view text) {
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) out.push_back(number(field, token));
        token.clear();
    };
    for (char c : text) {
        if (c == ',' || c == ';' || c == ' ' || c == '\t' || c == '[' || c == ']') {
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    return out;
}

inline std::uint64_t unsigned_integer(const std::string& field, std::string_view text) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError(field, "not a non-negative integer: '" + std::string(text) + "'");
    }
    return value;
}

inline bool boolean(const std::string& field, std::string_view text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(field, "expected true or false, got '" + std::string(text) + "'");
}

inline Matrix square(const std::string& field, const std::vector<double>& entries, int d) {
    if (entries.empty()) return Matrix::Zero(d, d);
    if (entries.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
        throw ConfigError(field, "expected " + std::to_string(d * d) + " entries, got " + std::to_string(entries.size()));
    }
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = entries[static_cast<std::size_t>(i * d + j)];
    }
    return m;
}

inline std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += format_double(xs[i]);
    }
    return out;
}

inline std::vector<double> row_major(const Matrix& m) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    }
    return out;
}

}  // namespace detail

/// Typed, validated configuration. Missing keys take their defaults.
inline ExperimentConfig build_config(const RawConfig& raw) {
    for (const auto& [key, value] : raw) {
        if (!is_known_key(key)) throw ConfigError(key, "unknown configuration key");
    }
    ExperimentConfig c;
    auto get = [&](std::string_view key) -> const std::string* {
        auto it = raw.find(key);
        return it == raw.end() ? nullptr : &it->second;
    };
    auto num = [&](const char* key, double& target) {
        if (const auto* v = get(key)) target = detail::number(key, *v);
    };
    auto list = [&](const char* key, std::vector<double>& target) {
        if (const auto* v = get(key)) target = detail::numbers(key, *v);
    };
    auto flag = [&](const char* key, bool& target) {
        if (const auto* v = get(key)) target = detail::boolean(key, *v);
    };
    auto text = [&](const char* key, std::string& target) {
        if (const auto* v = get(key)) target = *v;
    };

    if (const auto* v = get("command")) {
        const auto cmd = parse_command(*v);
        if (!cmd) throw ConfigError("command", "unrecognized command '" + *v + "'");
        c.command = *cmd;
    }
    if (const auto* v = get("dimension")) {
        const auto d = detail::unsigned_integer("dimension", *v);
        if (d < 1 || d > 64) throw ConfigError("dimension", "must lie in [1, 64]");
        c.dimension = static_cast<int>(d);
    }
    const int d = c.dimension;
    num("horizon", c.horizon);
    num("step", c.step);
    if (!(c.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
    if (!(c.step > 0.0 && c.step <= c.horizon)) throw ConfigError("step", "must lie in (0, horizon]");

    std::vector<double> entries;
    list("a", entries);
    c.a = detail::square("a", entries, d);
    entries.clear();
    list("a_tilde", entries);
    c.a_tilde = detail::square("a_tilde", entries, d);
    entries.clear();
    list("q", entries);
    c.q = detail::square("q", entries, d);
    entries.clear();
    list("drift", entries);
    if (entries.empty()) entries.assign(static_cast<std::size_t>(d), 0.0);
    if (entries.size() != static_cast<std::size_t>(d)) throw ConfigError("drift", "expected d entries");
    c.drift = Eigen::Map<const Vector>(entries.data(), d);

    num("rate", c.rate);
    if (c.rate < 0.0) throw ConfigError("rate", "must be >= 0");
    text("jump_law", c.jump_law);
    if (c.jump_law != "none" && c.jump_law != "gaussian" && c.jump_law != "discrete") {
        throw ConfigError("jump_law", "expected none, gaussian or discrete");
    }
    num("jump_scale", c.jump_scale);
    if (!(c.jump_scale > 0.0)) throw ConfigError("jump_scale", "must be positive");
    list("jump_atoms", c.jump_atoms);
    list("jump_weights", c.jump_weights);
    if (c.jump_law == "discrete") {
        if (c.jump_atoms.empty() || c.jump_atoms.size() % static_cast<std::size_t>(d) != 0) {
            throw ConfigError("jump_atoms", "expected a positive multiple of d entries");
        }
        const auto k = c.jump_atoms.size() / static_cast<std::size_t>(d);
        if (c.jump_weights.empty()) c.jump_weights.assign(k, 1.0);
        if (c.jump_weights.size() != k) throw ConfigError("jump_weights", "expected one weight per atom");
    }
    if (c.rate > 0.0 && c.jump_law == "none") throw ConfigError("jump_law", "a positive rate needs a jump law");

    text("small_jumps", c.small_jumps);
    if (c.small_jumps != "none" && c.small_jumps != "power") throw ConfigError("small_jumps", "expected none or power");
    num("small_coefficient", c.small_coefficient);
    num("small_alpha", c.small_alpha);
    num("small_epsilon", c.small_epsilon);
    flag("small_one_sided", c.small_one_sided);

    if (const auto* v = get("replicas")) {
        const auto n = detail::unsigned_integer("replicas", *v);
        if (n < 1) throw ConfigError("replicas", "must be >= 1");
        c.replicas = static_cast<std::size_t>(n);
    }
    if (const auto* v = get("seed")) c.seed = detail::unsigned_integer("seed", *v);
    num("sigma_tol", c.sigma_tol);
    num("tau", c.tau);
    num("se_multiplier", c.se_multiplier);
    num("drift_tol", c.drift_tol);
    list("probe_radii", c.probe_radii);
    num("probe_time", c.probe_time);
    num("probe_tol", c.probe_tol);
    if (c.sigma_tol < 0.0) throw ConfigError("sigma_tol", "must be >= 0");
    if (!(c.tau > 0.0)) throw ConfigError("tau", "must be positive");
    if (!(c.se_multiplier > 0.0)) throw ConfigError("se_multiplier", "must be positive");
    if (!(c.probe_time > 0.0)) throw ConfigError("probe_time", "must be positive");
    flag("refine", c.refine);
    text("expect_verdict", c.expect_verdict);
    if (c.expect_verdict != "DISTINCT" && c.expect_verdict != "INDISTINGUISHABLE" && c.expect_verdict != "INCONCLUSIVE" &&
        c.expect_verdict != "HYPOTHESIS_VIOLATED") {
        throw ConfigError("expect_verdict", "expected DISTINCT, INDISTINGUISHABLE, INCONCLUSIVE or HYPOTHESIS_VIOLATED");
    }
    flag("expect_equivalence", c.expect_equivalence);
    text("input", c.input);
    text("input_b", c.input_b);
    flag("write_paths", c.write_paths);
    text("out", c.out);
    if (c.out.empty()) throw ConfigError("out", "must not be empty");

    // Model-level checks, reported against the most specific key.
    try {
        WienerCovariance check(c.q);
        (void)check;
    } catch (const std::exception& e) {
        throw ConfigError("q", e.what());
    }
    try {
        c.jump_spec().validate();
    } catch (const std::exception& e) {
        throw ConfigError(c.small_jumps == "power" ? "small_jumps" : "jump_law", e.what());
    }
    return c;
}

inline ExperimentConfig build_config(const std::string& text) { return build_config(parse_key_values(text)); }

inline JumpSpec ExperimentConfig::jump_spec() const {
    JumpSpec spec = JumpSpec::none(dimension);
    spec.rate = rate;
    if (jump_law == "gaussian") {
        spec.sizes = GaussianJumps{jump_scale};
    } else if (jump_law == "discrete") {
        DiscreteJumps law;
        for (std::size_t i = 0; i + static_cast<std::size_t>(dimension) <= jump_atoms.size();
             i += static_cast<std::size_t>(dimension)) {
            law.atoms.push_back(Eigen::Map<const Vector>(jump_atoms.data() + i, dimension));
        }
        law.weights = jump_weights;
        spec.sizes = std::move(law);
    }
    if (jump_law == "none") spec.rate = 0.0;
    if (small_jumps == "power") {
        spec.small_jumps = PowerLawShells{small_coefficient, small_alpha, small_epsilon, small_one_sided};
    }
    return spec;
}

inline LevyTriplet ExperimentConfig::triplet() const { return LevyTriplet{drift, WienerCovariance(q), jump_spec()}; }

/// One `key=value` line per key, sorted, with every value normalized (numbers in
/// shortest round-trip form, defaults filled in). `out` is not part of it.
inline std::string canonical_form(const ExperimentConfig& c) {
    std::map<std::string, std::string> kv;
    kv["command"] = std::string(to_string(c.command));
    kv["dimension"] = std::to_string(c.dimension);
    kv["horizon"] = format_double(c.horizon);
    kv["step"] = format_double(c.step);
    kv["a"] = detail::join(detail::row_major(c.a));
    kv["a_tilde"] = detail::join(detail::row_major(c.a_tilde));
    kv["drift"] = detail::join(std::vector<double>(c.drift.data(), c.drift.data() + c.drift.size()));
    kv["q"] = detail::join(detail::row_major(c.q));
    kv["rate"] = format_double(c.rate);
    kv["jump_law"] = c.jump_law;
    kv["jump_scale"] = format_double(c.jump_scale);
    kv["jump_atoms"] = detail::join(c.jump_atoms);
    kv["jump_weights"] = detail::join(c.jump_weights);
    kv["small_jumps"] = c.small_jumps;
    kv["small_coefficient"] = format_double(c.small_coefficient);
    kv["small_alpha"] = format_double(c.small_alpha);
    kv["small_epsilon"] = format_double(c.small_epsilon);
    kv["small_one_sided"] = c.small_one_sided ? "true" : "false";
    kv["replicas"] = std::to_string(c.replicas);
    kv["seed"] = std::to_string(c.seed);
    kv["sigma_tol"] = format_double(c.sigma_tol);
    kv["tau"] = format_double(c.tau);
    kv["se_multiplier"] = format_double(c.se_multiplier);
    kv["drift_tol"] = format_double(c.drift_tol);
    kv["probe_radii"] = detail::join(c.probe_radii);
    kv["probe_time"] = format_double(c.probe_time);
    kv["probe_tol"] = format_double(c.probe_tol);
    kv["refine"] = c.refine ? "true" : "false";
    kv["expect_verdict"] = c.expect_verdict;
    kv["expect_equivalence"] = c.expect_equivalence ? "true" : "false";
    kv["input"] = c.input;
    kv["input_b"] = c.input_b;
    kv["write_paths"] = c.write_paths ? "true" : "false";
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

/// FNV-1a over the canonical form.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_form(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[x & 0xF];
        x >>= 4;
    }
    return out;
}

}  // namespace levyou::harness
