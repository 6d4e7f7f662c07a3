#pragma once

// Everything at once. io.hpp needs nlohmann/json on the include path.
#include "core.hpp"
#include "radial.hpp"
#include "report.hpp"
#include "thomas_fermi.hpp"
#include "schrodinger.hpp"
#include "hartree_fock.hpp"
#include "semiclassics.hpp"
#include "verification.hpp"
#include "io.hpp"
