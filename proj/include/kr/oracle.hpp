#pragma once

// Key type for the hidden ε channel of a Trajectory. Analysis code never
// includes this header; tests and the --reveal-hidden export do.

#include "kr/dynamics.hpp"

namespace kr {

class OracleAccess {
 private:
  OracleAccess() = default;
  friend OracleAccess oracle_access();
};

inline OracleAccess oracle_access() { return OracleAccess{}; }

}  // namespace kr
