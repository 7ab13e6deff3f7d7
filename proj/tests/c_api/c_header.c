/* The public header must compile as plain C. */
#include "influence/influence.h"

int main(void) {
  infl_spec spec;
  infl_spec_init(&spec);
  return spec.num_chains == 1 && infl_compare_change_scores(1.0, 0.0) == 1 ? 0 : 1;
}
