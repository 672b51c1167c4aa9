#include "tcbm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

namespace {

using Kind = TimeChangeKind;

struct Value {
    std::string text;
    std::size_t line;
};

struct Field {
    std::string section;
    std::string key;
    std::optional<Kind> only_for;  // time-change keys that apply to one kind
    std::function<void(RunConfig&, const Value&)> set;
    std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void fail(const Value& v, const std::string& message) {
    throw ConfigError(v.line, message);
}

double number(const Value& v) {
    try {
        return parse_double(v.text);
    } catch (const std::invalid_argument&) {
        fail(v, "expected a number, got '" + v.text + "'");
    }
}

double positive(const Value& v, const char* name) {
    const double d = number(v);
    if (!(d > 0.0) || !std::isfinite(d)) fail(v, std::string(name) + " must be positive");
    return d;
}

double non_negative(const Value& v, const char* name) {
    const double d = number(v);
    if (!(d >= 0.0) || !std::isfinite(d)) fail(v, std::string(name) + " must be non-negative");
    return d;
}

std::uint64_t unsigned_integer(const Value& v) {
    std::uint64_t out = 0;
    const auto* begin = v.text.data();
    const auto* end = begin + v.text.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end || v.text.empty()) {
        fail(v, "expected a non-negative integer, got '" + v.text + "'");
    }
    return out;
}

bool boolean(const Value& v) {
    if (v.text == "true") return true;
    if (v.text == "false") return false;
    fail(v, "expected true or false, got '" + v.text + "'");
}

std::vector<double> number_list(const Value& v) {
    std::vector<double> out;
    if (v.text.empty()) return out;
    for (const auto& part : split(v.text, ',')) out.push_back(number({part, v.line}));
    return out;
}

std::vector<Jump> jump_list(const Value& v) {
    std::vector<Jump> out;
    if (v.text.empty()) return out;
    for (const auto& part : split(v.text, ',')) {
        const auto pieces = split(part, ':');
        if (pieces.size() != 2) fail(v, "expected time:size, got '" + part + "'");
        out.push_back({number({pieces[0], v.line}), number({pieces[1], v.line})});
    }
    return out;
}

std::string show(double d) { return format_double(d); }
std::string show(bool b) { return b ? "true" : "false"; }
std::string show(std::uint64_t n) { return std::to_string(n); }

std::string show(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

std::string show(const std::vector<Jump>& jumps) {
    std::string out;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        if (i) out += ", ";
        out += format_double(jumps[i].time) + ":" + format_double(jumps[i].size);
    }
    return out;
}

std::string jump_law_name(JumpLaw law) {
    return law == JumpLaw::exponential ? "exponential" : "constant";
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto add = [&](std::string section, std::string key, std::optional<Kind> kind, auto set,
                       auto get) {
            f.push_back({std::move(section), std::move(key), kind, set, get});
        };
        add("time_change", "kind", std::nullopt,
            [](RunConfig& c, const Value& v) {
                try {
                    c.scenario.time_change.kind = time_change_kind_from_string(v.text);
                } catch (const InvalidSpec& e) {
                    fail(v, e.what());
                }
            },
            [](const RunConfig& c) { return to_string(c.scenario.time_change.kind); });

        add("time_change", "rate", Kind::linear,
            [](RunConfig& c, const Value& v) { c.scenario.time_change.rate = positive(v, "rate"); },
            [](const RunConfig& c) { return show(c.scenario.time_change.rate); });

        add("time_change", "breakpoints", Kind::deterministic_piecewise,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.piecewise.breakpoints = number_list(v);
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.piecewise.breakpoints); });
        add("time_change", "slopes", Kind::deterministic_piecewise,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.piecewise.slopes = number_list(v);
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.piecewise.slopes); });
        add("time_change", "jumps", Kind::deterministic_piecewise,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.piecewise.jumps = jump_list(v);
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.piecewise.jumps); });

        add("time_change", "drift", Kind::subordinator_drift,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.subordinator.drift = positive(v, "drift");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.subordinator.drift); });
        add("time_change", "intensity", Kind::subordinator_drift,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.subordinator.intensity = non_negative(v, "intensity");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.subordinator.intensity); });
        add("time_change", "jump_law", Kind::subordinator_drift,
            [](RunConfig& c, const Value& v) {
                auto& law = c.scenario.time_change.subordinator.law;
                if (v.text == "exponential") {
                    law = JumpLaw::exponential;
                } else if (v.text == "constant") {
                    law = JumpLaw::constant;
                } else {
                    fail(v, "jump_law must be exponential or constant, got '" + v.text + "'");
                }
            },
            [](const RunConfig& c) {
                return jump_law_name(c.scenario.time_change.subordinator.law);
            });
        add("time_change", "jump_mean", Kind::subordinator_drift,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.subordinator.jump_mean = positive(v, "jump_mean");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.subordinator.jump_mean); });
        add("time_change", "forced_jumps", Kind::subordinator_drift,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.subordinator.forced_jumps = jump_list(v);
            },
            [](const RunConfig& c) {
                return show(c.scenario.time_change.subordinator.forced_jumps);
            });

        add("time_change", "mean_reversion", Kind::integrated_diffusion,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.diffusion.mean_reversion = non_negative(v, "mean_reversion");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.diffusion.mean_reversion); });
        add("time_change", "long_run_level", Kind::integrated_diffusion,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.diffusion.long_run_level = positive(v, "long_run_level");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.diffusion.long_run_level); });
        add("time_change", "vol", Kind::integrated_diffusion,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.diffusion.vol = non_negative(v, "vol");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.diffusion.vol); });
        add("time_change", "initial_rate", Kind::integrated_diffusion,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.diffusion.initial_rate = positive(v, "initial_rate");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.diffusion.initial_rate); });
        add("time_change", "floor", Kind::integrated_diffusion,
            [](RunConfig& c, const Value& v) {
                c.scenario.time_change.diffusion.floor = positive(v, "floor");
            },
            [](const RunConfig& c) { return show(c.scenario.time_change.diffusion.floor); });
        add("time_change", "steps", Kind::integrated_diffusion,
            [](RunConfig& c, const Value& v) {
                const auto n = unsigned_integer(v);
                if (n < 1) fail(v, "steps must be at least 1");
                c.scenario.time_change.diffusion.steps = n;
            },
            [](const RunConfig& c) {
                return show(std::uint64_t{c.scenario.time_change.diffusion.steps});
            });

        add("market", "p", std::nullopt,
            [](RunConfig& c, const Value& v) {
                const double p = number(v);
                if (p == 0.0 || p == 1.0) {
                    fail(v, "p must not be 0 or 1 (power utility needs p in (0,1) or p > 1)");
                }
                if (!(p > 0.0) || !std::isfinite(p)) fail(v, "p must be positive");
                c.scenario.p = p;
            },
            [](const RunConfig& c) { return show(c.scenario.p); });
        add("market", "x", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.x = positive(v, "x"); },
            [](const RunConfig& c) { return show(c.scenario.x); });
        add("market", "t", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.t = non_negative(v, "t"); },
            [](const RunConfig& c) { return show(c.scenario.t); });
        add("market", "horizon", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.horizon = positive(v, "horizon"); },
            [](const RunConfig& c) { return show(c.scenario.horizon); });
        add("market", "market_horizon", std::nullopt,
            [](RunConfig& c, const Value& v) {
                c.scenario.market_horizon = positive(v, "market_horizon");
            },
            [](const RunConfig& c) { return show(c.scenario.market_horizon); });
        add("market", "s0", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.s0 = number(v); },
            [](const RunConfig& c) { return show(c.scenario.s0); });

        add("strategy", "theta", std::nullopt,
            [](RunConfig& c, const Value& v) {
                try {
                    c.scenario.theta.kind = theta_kind_from_string(v.text);
                } catch (const InvalidSpec& e) {
                    fail(v, e.what());
                }
            },
            [](const RunConfig& c) { return to_string(c.scenario.theta.kind); });
        add("strategy", "theta_level", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.theta.level = number(v); },
            [](const RunConfig& c) { return show(c.scenario.theta.level); });
        add("strategy", "theta_slope", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.theta.slope = number(v); },
            [](const RunConfig& c) { return show(c.scenario.theta.slope); });
        add("strategy", "theta_decay", std::nullopt,
            [](RunConfig& c, const Value& v) {
                c.scenario.theta.decay = non_negative(v, "theta_decay");
            },
            [](const RunConfig& c) { return show(c.scenario.theta.decay); });

        auto size_field = [&](const char* key, std::size_t minimum, auto member) {
            add("simulation", key, std::nullopt,
                [=](RunConfig& c, const Value& v) {
                    const auto n = unsigned_integer(v);
                    if (n < minimum) {
                        fail(v, std::string(key) + " must be at least " + std::to_string(minimum));
                    }
                    member(c) = n;
                },
                [=](const RunConfig& c) {
                    return show(std::uint64_t{member(const_cast<RunConfig&>(c))});
                });
        };
        size_field("n_paths", 1, [](RunConfig& c) -> std::size_t& { return c.scenario.n_paths; });
        size_field("n_physical", 2,
                   [](RunConfig& c) -> std::size_t& { return c.scenario.n_physical; });
        size_field("n_market", 2, [](RunConfig& c) -> std::size_t& { return c.scenario.n_market; });
        add("simulation", "seed", std::nullopt,
            [](RunConfig& c, const Value& v) { c.scenario.seed = unsigned_integer(v); },
            [](const RunConfig& c) { return show(std::uint64_t{c.scenario.seed}); });
        size_field("export_paths", 0, [](RunConfig& c) -> std::size_t& { return c.export_paths; });

        auto flag = [&](const char* key, auto member) {
            add("checks", key, std::nullopt,
                [=](RunConfig& c, const Value& v) { member(c.checks) = boolean(v); },
                [=](const RunConfig& c) {
                    return show(member(const_cast<CheckOptions&>(c.checks)));
                });
        };
        flag("forward", [](CheckOptions& o) -> bool& { return o.forward; });
        flag("backward", [](CheckOptions& o) -> bool& { return o.backward; });
        flag("failure_demo", [](CheckOptions& o) -> bool& { return o.failure_demo; });
        flag("isometry", [](CheckOptions& o) -> bool& { return o.isometry; });
        flag("martingale", [](CheckOptions& o) -> bool& { return o.martingale; });
        flag("conditional_value", [](CheckOptions& o) -> bool& { return o.conditional_value; });
        flag("freeze_lambda", [](CheckOptions& o) -> bool& { return o.freeze_lambda; });

        add("checks", "scan_family", std::nullopt,
            [](RunConfig& c, const Value& v) {
                try {
                    c.checks.scan_family = perturbation_kind_from_string(v.text);
                } catch (const InvalidSpec& e) {
                    fail(v, e.what());
                }
            },
            [](const RunConfig& c) { return to_string(c.checks.scan_family); });
        add("checks", "scan_epsilons", std::nullopt,
            [](RunConfig& c, const Value& v) { c.checks.scan_epsilons = number_list(v); },
            [](const RunConfig& c) { return show(c.checks.scan_epsilons); });
        add("checks", "tower_epsilons", std::nullopt,
            [](RunConfig& c, const Value& v) { c.checks.tower_epsilons = number_list(v); },
            [](const RunConfig& c) { return show(c.checks.tower_epsilons); });

        auto tolerance = [&](const char* key, auto member) {
            add("checks", key, std::nullopt,
                [=](RunConfig& c, const Value& v) { member(c.checks) = positive(v, key); },
                [=](const RunConfig& c) {
                    return show(member(const_cast<CheckOptions&>(c.checks)));
                });
        };
        tolerance("equality_sigmas",
                  [](CheckOptions& o) -> double& { return o.thresholds.equality_sigmas; });
        tolerance("inequality_sigmas",
                  [](CheckOptions& o) -> double& { return o.thresholds.inequality_sigmas; });
        tolerance("max_inadmissible_fraction",
                  [](CheckOptions& o) -> double& { return o.thresholds.max_inadmissible_fraction; });
        tolerance("exactness_tolerance",
                  [](CheckOptions& o) -> double& { return o.exactness_tolerance; });
        tolerance("cross_check_tolerance",
                  [](CheckOptions& o) -> double& { return o.cross_check_tolerance; });
        return f;
    }();
    return table;
}

const std::vector<std::string>& sections() {
    static const std::vector<std::string> names{"time_change", "market", "strategy", "simulation",
                                                "checks"};
    return names;
}

std::string_view strip_comment(std::string_view line) {
    const auto pos = line.find_first_of("#;");
    return pos == std::string_view::npos ? line : line.substr(0, pos);
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    std::map<std::pair<std::string, std::string>, Value> entries;
    std::string section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(strip_comment(text.substr(start, end - start)));
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (std::find(sections().begin(), sections().end(), section) == sections().end()) {
                throw ConfigError(line_no, "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
        if (section.empty()) throw ConfigError(line_no, "key outside of any section");
        std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(line_no, "empty key");
        Value value{std::string(trim(line.substr(eq + 1))), line_no};
        auto [it, inserted] = entries.emplace(std::pair{section, key}, value);
        if (!inserted) {
            throw ConfigError(line_no, "duplicate key '" + section + "." + key + "' (first on line " +
                                           std::to_string(it->second.line) + ")");
        }
    }

    for (const auto* required : {"time_change.kind", "market.p", "market.x"}) {
        const std::string name(required);
        const auto dot = name.find('.');
        if (!entries.count({name.substr(0, dot), name.substr(dot + 1)})) {
            throw ConfigError(0, "missing required key '" + name + "'");
        }
    }

    RunConfig config;
    config.scenario.time_change = {};
    fields().front().set(config, entries.at({"time_change", "kind"}));
    const auto kind = config.scenario.time_change.kind;

    // Process in file order so the first bad line is the one reported.
    std::vector<std::pair<const std::pair<std::string, std::string>*, const Value*>> ordered;
    for (const auto& [k, v] : entries) ordered.emplace_back(&k, &v);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.second->line < b.second->line; });
    for (const auto& [name, value] : ordered) {
        const auto& [sec, key] = *name;
        auto field = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
            return f.section == sec && f.key == key;
        });
        if (field == fields().end()) {
            throw ConfigError(value->line, "unknown key '" + sec + "." + key + "'");
        }
        if (field->only_for && *field->only_for != kind) {
            throw ConfigError(value->line, "key '" + sec + "." + key +
                                               "' does not apply to time_change kind '" +
                                               to_string(kind) + "'");
        }
        field->set(config, *value);
    }

    auto& tc = config.scenario.time_change;
    tc.piecewise.horizon = tc.subordinator.horizon = tc.diffusion.horizon = config.scenario.horizon;
    tc.piecewise.market_horizon = tc.subordinator.market_horizon = tc.diffusion.market_horizon =
        config.scenario.market_horizon;

    try {
        config.scenario.validate();
        if (!tc.is_random()) {
            RngStream unused;
            (void)make_time_change(tc, config.scenario.horizon, config.scenario.market_horizon,
                                   unused, nullptr);
        }
    } catch (const InvalidSpec& e) {
        throw ConfigError(0, e.what());
    }
    return config;
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    const auto kind = config.scenario.time_change.kind;
    std::string section;
    for (const auto& f : fields()) {
        if (f.only_for && *f.only_for != kind) continue;
        if (f.section != section) {
            if (!section.empty()) out << '\n';
            section = f.section;
            out << '[' << section << "]\n";
        }
        out << f.key << " = " << f.get(config) << '\n';
    }
    return out.str();
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace tcbm
