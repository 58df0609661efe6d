#pragma once

// YAML model files. Schema:
//
//   d: 3                       # system dimension (default 1)
//   a_dagger: 75               # maximum age, required
//   breakpoints: [0, 18, 75]   # optional, defaults to [0, a_dagger]
//   beta:  [[...], ...]        # d x d grid of expressions in a, alpha
//   b:     [[...], ...]        # d x d grid of expressions in a
//   delta: [[...], ...]        # d x d grid of expressions in a
//   splitting: r0              # r0 | {kind: type_reproduction, birth: beta|b}
//                              #    | {kind: custom, birth: [..], transition: [..]}
//
// For d = 1 a coefficient may be a single expression string. Omitted
// coefficients are zero. Entry references in custom splittings are written
// "beta[i][j]" or "b[i][j]" (0-based).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "repnum/errors.hpp"
#include "repnum/expression.hpp"
#include "repnum/model.hpp"

namespace repnum {

struct ModelConfig {
    ModelCoefficients model;
    SplittingSpec splitting;

    [[nodiscard]] CoefficientSet coefficients() const { return split(model, splitting); }
};

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(std::string source_name) : source_(std::move(source_name)) {}

    ModelConfig read(const YAML::Node& root) {
        if (!root.IsMap()) fail(root, "<root>", "expected a mapping at top level");
        ModelConfig cfg;
        auto& m = cfg.model;
        m.dim = root["d"] ? scalar<int>(root["d"], "d") : 1;
        if (m.dim < 1) fail(root["d"], "d", "dimension must be positive");
        if (!root["a_dagger"]) fail(root, "a_dagger", "missing required field");
        m.a_dagger = scalar<double>(root["a_dagger"], "a_dagger");
        if (!(m.a_dagger > 0.0)) fail(root["a_dagger"], "a_dagger", "must be positive");

        if (const auto bp = root["breakpoints"]) {
            if (!bp.IsSequence()) fail(bp, "breakpoints", "expected a list of numbers");
            for (std::size_t i = 0; i < bp.size(); ++i) {
                m.breakpoints.push_back(scalar<double>(bp[i], "breakpoints[" + std::to_string(i) + "]"));
            }
            bool ok = m.breakpoints.size() >= 2 && m.breakpoints.front() == 0.0 &&
                      m.breakpoints.back() == m.a_dagger;
            for (std::size_t i = 1; ok && i < m.breakpoints.size(); ++i) {
                ok = m.breakpoints[i] > m.breakpoints[i - 1];
            }
            if (!ok) fail(bp, "breakpoints", "must increase strictly from 0 to a_dagger");
        } else {
            m.breakpoints = default_breakpoints(m.a_dagger);
        }

        for (const auto& kv : root) {
            const auto key = kv.first.as<std::string>();
            if (key != "d" && key != "a_dagger" && key != "breakpoints" && key != "beta" &&
                key != "b" && key != "delta" && key != "splitting") {
                fail(kv.first, key, "unknown field");
            }
        }

        const double a_dagger = m.a_dagger;
        if (auto grid = grid_of(root["beta"], "beta", m.dim, true)) {
            m.beta = [g = std::move(*grid), a_dagger, d = m.dim](double a, double alpha) {
                return evaluate(g, d, {a, alpha, a_dagger});
            };
        }
        if (auto grid = grid_of(root["b"], "b", m.dim, false)) {
            m.b = [g = std::move(*grid), a_dagger, d = m.dim](double a) {
                return evaluate(g, d, {a, 0.0, a_dagger});
            };
        }
        if (auto grid = grid_of(root["delta"], "delta", m.dim, false)) {
            m.delta = [g = std::move(*grid), a_dagger, d = m.dim](double a) {
                return evaluate(g, d, {a, 0.0, a_dagger});
            };
        }
        cfg.splitting = read_splitting(root["splitting"]);
        return cfg;
    }

private:
    using Grid = std::vector<std::optional<Expression>>;  // nullopt == literal zero

    [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                           const std::string& message) const {
        const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
        throw Error(ErrorCode::ConfigParse, "config",
                    source_ + ":" + std::to_string(line) + ": field '" + field + "': " + message);
    }

    template <class T>
    T scalar(const YAML::Node& node, const std::string& field) const {
        if (!node.IsScalar()) fail(node, field, "expected a scalar");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, field, "cannot convert '" + node.Scalar() + "'");
        }
    }

    Expression expression(const YAML::Node& node, const std::string& field, bool allow_alpha) const {
        if (!node.IsScalar()) fail(node, field, "expected an expression string");
        try {
            Expression e = parse_coefficient(node.Scalar());
            if (!allow_alpha && e.depends_on_alpha()) {
                fail(node, field, "'alpha' is only allowed in beta");
            }
            return e;
        } catch (const ParseError& err) {
            fail(node, field, err.what());
        }
    }

    std::optional<Grid> grid_of(const YAML::Node& node, const std::string& field, int d,
                                bool allow_alpha) const {
        if (!node) return std::nullopt;
        Grid g(static_cast<std::size_t>(d * d));
        bool any = false;
        auto put = [&](std::size_t idx, const YAML::Node& cell, const std::string& name) {
            Expression e = expression(cell, name, allow_alpha);
            if (e.kind() == Expression::Kind::Number && e.value() == 0.0) return;
            g[idx] = std::move(e);
            any = true;
        };
        if (node.IsScalar()) {
            if (d != 1) fail(node, field, "a single expression is only allowed when d = 1");
            put(0, node, field);
        } else {
            if (!node.IsSequence() || node.size() != static_cast<std::size_t>(d)) {
                fail(node, field, "expected " + std::to_string(d) + " rows");
            }
            for (int r = 0; r < d; ++r) {
                const auto row = node[r];
                const std::string rname = field + "[" + std::to_string(r) + "]";
                if (!row.IsSequence() || row.size() != static_cast<std::size_t>(d)) {
                    fail(row, rname, "expected " + std::to_string(d) + " entries");
                }
                for (int c = 0; c < d; ++c) {
                    put(static_cast<std::size_t>(r * d + c), row[c],
                        rname + "[" + std::to_string(c) + "]");
                }
            }
        }
        if (!any) return std::nullopt;
        return g;
    }

    static Eigen::MatrixXd evaluate(const Grid& g, int d, const Expression::Point& p) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                if (const auto& e = g[static_cast<std::size_t>(r * d + c)]) m(r, c) = e->evaluate(p);
            }
        }
        return m;
    }

    EntryRef entry(const YAML::Node& node, const std::string& field) const {
        const std::string s = scalar<std::string>(node, field);
        EntryRef e;
        int r = -1, c = -1;
        char tail = 0;
        if (std::sscanf(s.c_str(), "beta[%d][%d]%c", &r, &c, &tail) == 2) {
            e.kernel = KernelKind::Beta;
        } else if (std::sscanf(s.c_str(), "b[%d][%d]%c", &r, &c, &tail) == 2) {
            e.kernel = KernelKind::B;
        } else {
            fail(node, field, "expected an entry like beta[0][1] or b[0][1]");
        }
        e.row = r;
        e.col = c;
        return e;
    }

    SplittingSpec read_splitting(const YAML::Node& node) const {
        if (!node) return SplittingSpec::r0();
        std::string kind;
        if (node.IsScalar()) {
            kind = node.Scalar();
        } else if (node.IsMap() && node["kind"]) {
            kind = scalar<std::string>(node["kind"], "splitting.kind");
        } else {
            fail(node, "splitting", "expected a name or a mapping with 'kind'");
        }
        if (kind == "r0" || kind == "R0") return SplittingSpec::r0();
        if (kind == "type_reproduction") {
            if (!node.IsMap() || !node["birth"]) fail(node, "splitting.birth", "missing");
            const auto birth = scalar<std::string>(node["birth"], "splitting.birth");
            if (birth == "beta") return SplittingSpec::type_reproduction(KernelKind::Beta);
            if (birth == "b") return SplittingSpec::type_reproduction(KernelKind::B);
            fail(node["birth"], "splitting.birth", "expected 'beta' or 'b'");
        }
        if (kind == "custom") {
            std::vector<EntryRef> birth, transition;
            for (auto [key, list] : {std::pair{"birth", &birth}, std::pair{"transition", &transition}}) {
                const auto seq = node[key];
                if (!seq) continue;
                const std::string f = std::string("splitting.") + key;
                if (!seq.IsSequence()) fail(seq, f, "expected a list of entries");
                for (std::size_t i = 0; i < seq.size(); ++i) {
                    list->push_back(entry(seq[i], f + "[" + std::to_string(i) + "]"));
                }
            }
            return SplittingSpec::custom(std::move(birth), std::move(transition));
        }
        fail(node, "splitting", "unknown splitting '" + kind + "'");
    }

    std::string source_;
};

}  // namespace detail

[[nodiscard]] inline ModelConfig parse_config(const std::string& text,
                                              const std::string& source_name = "<string>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ConfigParse, "config",
                    source_name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    return detail::ConfigReader(source_name).read(root);
}

[[nodiscard]] inline ModelConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ConfigNotFound, "config", "cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

}  // namespace repnum
