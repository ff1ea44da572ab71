#include <math.h>
#include <stdio.h>
#include "gamedyn.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            char msg[256];                                           \
            gd_last_error_message(msg, sizeof msg);                  \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, msg); \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(void) {
    double y[3] = {0.5, 0.5, 0.5};
    double x[3];
    CHECK(gd_project_simplex(y, 3, x) == GD_STATUS_OK);
    CHECK(fabs(x[0] - 1.0 / 3.0) < 1e-12);

    GdModel model;
    CHECK(gd_model_from_name("rd", &model) == GD_STATUS_OK);
    CHECK(gd_model_from_name("nope", &model) == GD_STATUS_UNKNOWN_MODEL);

    GdPayoffSource *src = NULL;
    CHECK(gd_source_example1(&src) == GD_STATUS_OK);
    GdConfig cfg = gd_config_default();
    cfg.dt = 1e-2;
    cfg.horizon = 10.0;
    double x0[2] = {0.5, 0.5};
    GdTrajectory *traj = NULL;
    CHECK(gd_integrate(model, cfg, x0, 2, src, &traj) == GD_STATUS_OK);
    size_t len = gd_trajectory_len(traj);
    CHECK(len == 101);
    double last[2];
    CHECK(gd_trajectory_strategy(traj, len - 1, last) == GD_STATUS_OK);
    CHECK(fabs(last[0] + last[1] - 1.0) < 1e-9);
    CHECK(gd_trajectory_strategy(traj, len, last) == GD_STATUS_INVALID_ARGUMENT);

    gd_trajectory_free(traj);
    gd_source_free(src);

    double a[9] = {0, -1, 2, 2, 0, -1, -1, 2, 0};
    GdContractivity cls;
    double pairing;
    CHECK(gd_contractivity(a, 3, 100, 1, &cls, &pairing) == GD_STATUS_OK);
    CHECK(cls == GD_CONTRACTIVITY_STRICTLY_CONTRACTIVE);
    CHECK(fabs(pairing + 1.0) < 1e-9);
    printf("ok\n");
    return 0;
}
