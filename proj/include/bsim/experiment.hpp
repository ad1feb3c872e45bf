#pragma once

// Named, seeded experiments over the simulator modules with JSON and table
// output.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace bsim {

enum class ExperimentName {
    Hom,
    BellMeasure,
    TeleportDv,
    QkdDv,
    MdiQkd,
    PhotonSubtract,
    Hadamard,
    Cnot,
    Mzi,
    Rng,
    G2,
    Homodyne,
    TeleportCv,
    QkdCv,
    Physicality,
};

const char* to_string(ExperimentName name);
// Throws ValidationError for an unknown name.
ExperimentName parse_experiment(const std::string& name);

// Bad user input: unknown names, inapplicable or malformed parameters,
// values outside an operation's preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentParams {
    std::optional<double> theta;
    std::optional<double> phi;
    std::optional<double> r;
    std::optional<double> s;
    std::optional<std::complex<double>> alpha;
    std::optional<std::complex<double>> beta;
    std::optional<std::int64_t> trials;
    std::optional<int> cutoff;
};

struct ExperimentSpec {
    ExperimentName name = ExperimentName::Hom;
    ExperimentParams params;
    std::uint64_t seed = 42;
};

// Parameter values as text: numbers, "re,im" for complex values. Rejects
// unknown keys and keys that do not apply to the experiment, then validates.
ExperimentSpec make_spec(const std::string& name, const std::map<std::string, std::string>& params,
                         std::uint64_t seed = 42);

// Throws ValidationError if the spec would violate a precondition.
void validate(const ExperimentSpec& spec);

struct ExperimentResult {
    ExperimentSpec spec;
    nlohmann::ordered_json params;   // effective values, defaults filled in
    nlohmann::ordered_json exact;    // seed independent
    nlohmann::ordered_json sampled;  // empty unless trials were requested
    double runtime_ms = 0.0;
};

ExperimentResult run(const ExperimentSpec& spec);

enum class OutputFormat { Json, Table };

nlohmann::ordered_json to_json(const ExperimentResult& result);
std::string emit(const ExperimentResult& result, OutputFormat format);

// "re,im" or a bare real number.
std::complex<double> parse_complex(const std::string& text);

}  // namespace bsim
