#include <stdio.h>
#include <string.h>

#include "rmlearn.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    if ((call) != RM_OK) {                                                     \
      fprintf(stderr, "%s failed: %s\n", #call, rm_last_error());              \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  rm_sample *x = NULL;
  CHECK(rm_sample_new("a b", &x));
  uint32_t ls[] = {1, 2};
  double rs[] = {0.0, 1.0};
  rm_insert ins;
  CHECK(rm_sample_add_trace(x, ls, rs, 2, &ins));
  uint32_t ls2[] = {2};
  double rs2[] = {0.0};
  CHECK(rm_sample_add_trace(x, ls2, rs2, 1, &ins));

  rm_machine *m = NULL;
  CHECK(rm_learn_exact(x, 5, 100000, &m));
  size_t n;
  CHECK(rm_machine_num_states(m, &n));
  size_t v = 0;
  double r;
  CHECK(rm_machine_step(m, 0, 1, &v, &r));
  CHECK(rm_machine_step(m, v, 2, &v, &r));
  if (r != 1.0) {
    fprintf(stderr, "unexpected reward %f\n", r);
    return 1;
  }
  char *text = NULL;
  CHECK(rm_machine_to_string(m, &text));
  if (strstr(text, "props: a b") == NULL) {
    fprintf(stderr, "unexpected text %s\n", text);
    return 1;
  }
  rm_string_free(text);
  if (rm_machine_parse("not a machine", &m) != RM_PARSE_ERROR) {
    return 1;
  }
  rm_machine_free(m);
  rm_sample_free(x);
  printf("ok %zu\n", n);
  return 0;
}
