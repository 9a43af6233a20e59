#include <math.h>
#include <stdio.h>
#include "faci.h"

int main(void) {
    double eta = 0.0;
    if (faci_fixed_eta_heuristic(0.1, 8, 500, &eta) != FACI_STATUS_OK || fabs(eta - 2.7613804438416536) > 1e-12) {
        return 1;
    }
    FaciScoreWindow *w = NULL;
    if (faci_window_new(4, &w) != FACI_STATUS_OK) {
        return 2;
    }
    for (int i = 1; i <= 4; i++) {
        faci_window_push(w, (double)i);
    }
    double q = 0.0;
    if (faci_window_quantile(w, 0.5, &q) != FACI_STATUS_OK || q != 2.0) {
        return 3;
    }
    faci_window_free(w);
    const double gammas[2] = {0.01, 0.02};
    FaciEnsemble *e = NULL;
    if (faci_ensemble_new(gammas, 2, 0.1, 100, FACI_ETA_MODE_FIXED, &e) != FACI_STATUS_OK) {
        return 4;
    }
    FaciStepResult r;
    if (faci_ensemble_step(e, 0.5, FACI_OUTPUT_AVERAGED, 0.0, &r) != FACI_STATUS_OK || r.selected != -1) {
        return 5;
    }
    faci_ensemble_free(e);
    if (faci_window_new(0, &w) != FACI_STATUS_INVALID_ARGUMENT || faci_last_error() == NULL) {
        return 6;
    }
    printf("ok\n");
    return 0;
}
