#include "poscorr/qstate.hpp"

#include <string>

#include <fmt/format.h>

namespace poscorr {

std::string_view to_string(Bell b) {
  switch (b) {
    case Bell::phi_plus: return "phi+";
    case Bell::phi_minus: return "phi-";
    case Bell::psi_plus: return "psi+";
    case Bell::psi_minus: return "psi-";
  }
  return "?";
}

Bell parse_bell(std::string_view name) {
  for (Bell b : {Bell::phi_plus, Bell::phi_minus, Bell::psi_plus, Bell::psi_minus}) {
    if (name == to_string(b)) return b;
  }
  throw std::invalid_argument(fmt::format("unknown Bell state '{}' (expected phi+, phi-, psi+ or psi-)", name));
}

}  // namespace poscorr
