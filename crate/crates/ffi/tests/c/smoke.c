#include <stdio.h>
#include "fountcast.h"

static const char *SCENARIO =
    "{\"layers\":{\"preset\":\"crew\"},"
    "\"classes\":[{\"highest_layer\":3,\"prior\":1,"
    "\"distribution\":{\"preset\":\"delta-iv\"},\"alphas\":[0.33,0.19,0.35]}],"
    "\"service\":{\"n_max\":13000}}";

int main(void) {
    FcScenario *s = NULL;
    FcAllocation *a = NULL;
    if (fc_scenario_from_json(SCENARIO, &s) != FC_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", fc_last_error());
        return 1;
    }
    if (fc_solve(s, FC_SOLVER_SIMPLIFIED_GD, 0, &a) != FC_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", fc_last_error());
        return 1;
    }
    size_t layers = 0;
    fc_allocation_layers(a, &layers);
    for (size_t l = 0; l < layers; l++) {
        double d;
        uint64_t n;
        fc_allocation_layer(a, l, &d, &n);
        printf("%zu %.6f %llu\n", l, d, (unsigned long long)n);
    }
    double u, umax;
    uint64_t total;
    bool ok;
    fc_allocation_summary(a, &u, &umax, &total, &ok);
    printf("total %llu utility %.6f\n", (unsigned long long)total, u);
    fc_allocation_free(a);
    fc_scenario_free(s);
    return ok && total <= 13000 ? 0 : 1;
}
