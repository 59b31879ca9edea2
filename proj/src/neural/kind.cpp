#include <stdexcept>

#include "mimo/neural/neural.hpp"

namespace mimo {

std::string to_string(DetectorKind kind) { return kind == DetectorKind::Gepnet ? "gepnet" : "gpicnet"; }

DetectorKind parse_detector_kind(const std::string& name) {
    if (name == "gepnet") return DetectorKind::Gepnet;
    if (name == "gpicnet") return DetectorKind::Gpicnet;
    throw std::invalid_argument("unknown neural detector '" + name + "'");
}

}  // namespace mimo
