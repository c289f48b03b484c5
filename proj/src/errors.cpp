#include "patchae/errors.hpp"

namespace patchae {

int exit_code(const Error& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 1;
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 3;
    return 2;
}

}  // namespace patchae
