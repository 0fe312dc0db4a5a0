#include "glarify/error.hpp"

// Out-of-line anchor so the vtables live in one translation unit.
namespace glarify {}
