#include <math.h>
#include <stdio.h>
#include "latdisp.h"

#define CHECK(expr) do { if ((expr) != LD_STATUS_OK) { \
    fprintf(stderr, "%s failed: %s\n", #expr, ld_last_error_message()); return 1; } } while (0)

int main(void) {
    struct LdGrid *grid = NULL;
    struct LdField *field = NULL, *moved = NULL;
    double before, after;
    CHECK(ld_grid_new(2, 16, 1.0, &grid));
    CHECK(ld_field_gaussian(grid, 8.0, 8.0, 1.25, 1.0, 0.0, &field));
    CHECK(ld_linear_propagate(field, 1.5, LD_FLOW_KIND_DISCRETE, &moved));
    CHECK(ld_lp_norm(field, 2.0, &before));
    CHECK(ld_lp_norm(moved, 2.0, &after));
    if (fabs(before - after) > 1e-12) return 2;
    if (ld_lp_norm(NULL, 2.0, &after) != LD_STATUS_NULL_POINTER) return 3;
    if (ld_last_error_message() == NULL) return 4;
    ld_field_free(moved);
    ld_field_free(field);
    ld_grid_free(grid);
    printf("ok %s\n", ld_version());
    return 0;
}
