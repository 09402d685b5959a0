#pragma once

#include <iosfwd>
#include <string>

#include "epw/mdp.hpp"

namespace epw {

// Structured-text instance format:
//   epw-mdp 1
//   horizon H
//   actions A
//   features dS
//   initial ID
//   state ID LEVEL KIND f0 .. f{dS-1}     (KIND: 0 ordinary, 1 failure, 2 absorbed)
//   arc FROM ACTION COUNT (ID PROB)...
//   end
// Doubles print as %.17g so tables round-trip exactly; per-(state, action)
// probabilities must sum to 1 within 1e-12 on load.
void save_instance(const LeveledMdp& mdp, std::ostream& out);
void save_instance_file(const LeveledMdp& mdp, const std::string& path);

TabularMdp load_instance(std::istream& in, const std::string& name = "instance");
TabularMdp load_instance_file(const std::string& path);

}  // namespace epw
