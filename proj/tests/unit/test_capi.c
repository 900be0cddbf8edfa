#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "plprep/plprep.h"

static int failures = 0;

#define EXPECT(cond)                                                         \
  do {                                                                       \
    if (!(cond)) {                                                           \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
              plp_last_error());                                             \
      ++failures;                                                            \
    }                                                                        \
  } while (0)

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  char path[1024];
  mkdir(dir, 0755);

  EXPECT(strlen(plp_version()) > 0);
  EXPECT(strcmp(plp_status_string(PLP_ERR_HULL), plp_status_string(PLP_OK)) != 0);

  plp_model* model = NULL;
  EXPECT(plp_model_create_mvn(5, &model) == PLP_OK);
  EXPECT(plp_model_param_dim(model) == 3);
  char name[64];
  EXPECT(plp_model_name(model, name, sizeof name) == PLP_OK);
  EXPECT(plp_model_name(model, name, 2) == PLP_OK && strlen(name) == 1);
  EXPECT(plp_model_name(model, name, 0) == PLP_ERR_INVALID_ARGUMENT);

  plp_model* bad = NULL;
  EXPECT(plp_model_create_mvn(1, &bad) != PLP_OK);
  EXPECT(bad == NULL);
  EXPECT(strlen(plp_last_error()) > 0);

  const double theta[3] = {0.0, 1.0, 0.5};
  plp_dataset* data = NULL;
  EXPECT(plp_dataset_simulate(model, theta, 3, 30, 11, 0, &data) == PLP_OK);
  EXPECT(plp_dataset_n(data) == 30);
  EXPECT(plp_dataset_q(data) == 5);

  const double bad_theta[3] = {0.0, -1.0, 0.5};
  plp_dataset* none = NULL;
  EXPECT(plp_dataset_simulate(model, bad_theta, 3, 30, 11, 0, &none) == PLP_ERR_DOMAIN);
  EXPECT(plp_dataset_simulate(model, theta, 2, 30, 11, 0, &none) == PLP_ERR_DOMAIN);

  snprintf(path, sizeof path, "%s/y.csv", dir);
  EXPECT(plp_dataset_save_csv(data, path, NULL) == PLP_OK);
  plp_dataset* back = NULL;
  EXPECT(plp_dataset_load_csv(path, NULL, &back) == PLP_OK);
  EXPECT(plp_dataset_n(back) == 30);

  snprintf(path, sizeof path, "%s/missing.csv", dir);
  EXPECT(plp_dataset_load_csv(path, NULL, &none) == PLP_ERR_IO);

  double hat[3];
  int converged = 0;
  EXPECT(plp_mple(model, data, theta, 3, hat, &converged) == PLP_OK);
  EXPECT(converged == 1);

  double stat = -1.0;
  EXPECT(plp_pw_us(model, data, theta, 3, &stat) == PLP_OK);
  EXPECT(stat >= 0.0);

  const double alphas[2] = {0.1, 0.05};
  plp_test_result res[2];
  EXPECT(plp_prepivot_test(model, data, theta, 3, 99, 50, alphas, 2, 4, PLP_HULL_REJECT_POINT, res) == PLP_OK);
  EXPECT(fabs(res[0].statistic - stat) <= 1e-12 * (1.0 + stat));
  EXPECT(res[0].alpha == 0.1 && res[1].alpha == 0.05);
  EXPECT(res[0].critical_value <= res[1].critical_value);

  char* json = NULL;
  EXPECT(plp_prepivot_test_json(model, data, theta, 3, 99, 50, alphas, 2, 4, PLP_HULL_REJECT_POINT, &json) == PLP_OK);
  EXPECT(json != NULL && strstr(json, "critical_value") != NULL);
  plp_string_free(json);

  /* B = 10 leaves no replicate to calibrate at the 5% level. */
  EXPECT(plp_prepivot_test(model, data, theta, 3, 10, 10, alphas, 2, 4, PLP_HULL_REJECT_POINT, res) ==
         PLP_ERR_DOMAIN);

  plp_spec* spec = NULL;
  EXPECT(plp_spec_parse("{\"model\":{\"type\":\"mvn\",\"q\":4,\"theta\":[0,1,0.5]},\"n\":20,"
                        "\"statistics\":[\"pw_us\",\"pw\"],\"alphas\":[0.1,0.05],\"trials\":2,\"B\":39,\"M\":20,"
                        "\"info\":{\"n_mc\":10000}}",
                        &spec) == PLP_OK);
  plp_spec* broken = NULL;
  EXPECT(plp_spec_parse("{not json", &broken) == PLP_ERR_PARSE);
  snprintf(path, sizeof path, "%s/study", dir);
  EXPECT(plp_spec_set_out_dir(spec, path) == PLP_OK);
  EXPECT(plp_spec_set_threads(spec, 2) == PLP_OK);
  EXPECT(plp_spec_set_hull_policy(spec, PLP_HULL_ERROR) == PLP_OK);
  EXPECT(plp_spec_set_hull_policy(spec, PLP_HULL_REJECT_POINT) == PLP_OK);
  EXPECT(strcmp(plp_spec_out_dir(spec), path) == 0);
  double t[8];
  size_t p = 0;
  EXPECT(plp_spec_theta(spec, t, 8, &p) == PLP_OK);
  EXPECT(p == 3 && t[2] == 0.5);
  char* summary = NULL;
  EXPECT(plp_run_study(spec, &summary) == PLP_OK);
  plp_string_free(summary);
  snprintf(path, sizeof path, "%s/study/rejection.csv", dir);
  FILE* f = fopen(path, "r");
  EXPECT(f != NULL);
  if (f) fclose(f);

  plp_spec_free(spec);
  plp_dataset_free(back);
  plp_dataset_free(data);
  plp_model_free(model);
  plp_model_free(NULL);

  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
