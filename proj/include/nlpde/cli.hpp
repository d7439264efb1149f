#pragma once

#include <map>
#include <string>

namespace nlpde {

/// One parsed configuration value from the key-value config format.
struct ConfigValue {
    enum class Kind { Str, Num, Bool };
    Kind kind = Kind::Str;
    std::string str;
    double num = 0.0;
    bool flag = false;
};

/// Flat map keyed by dotted path, e.g. "grid.n_y" or "problem.A.q11".
using ConfigMap = std::map<std::string, ConfigValue>;

/// Parses the supported config grammar: `[table]` headers, `key = value`
/// lines, `#` comments; values are double-quoted strings, numbers, or
/// true/false. Nothing else (no arrays, no multi-line strings).
ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config(const std::string& path);

/// Applies one `--set key=value` override (value typed like in the file,
/// with bare words treated as strings).
void apply_override(ConfigMap& cfg, const std::string& keyval);

/// Full CLI: subcommand dispatch, artifact emission, exit-code contract
/// (0 ok, 1 validation, 2 solver, 3 verification gate). Errors print one
/// line `ERROR <code> <module>::<op> <message>` on stderr.
int cli_run(int argc, const char* const* argv);

} // namespace nlpde
