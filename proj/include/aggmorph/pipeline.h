#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace aggmorph {

// Exit statuses of RunCommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Length, area and volume factors converting a unit into cm.
struct UnitFactors {
  double length = 1;
  double area = 1;
  double volume = 1;
};

// "cm", "mm" or "in"; anything else throws kInvalidInput.
UnitFactors ParseUnits(std::string_view units);

// Runs one CLI invocation. `args` excludes the program name. Results go to
// `out` or to files, diagnostics to `err`.
int RunCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aggmorph
