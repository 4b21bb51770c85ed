/* Checks that the public header compiles as C and links. */
#include "ravenbench/ravenbench.h"

#include <stdio.h>
#include <string.h>

int main(void) {
    rb_battery* b = NULL;
    if (strlen(rb_version()) == 0) return 1;
    if (rb_battery_generate(7, 4, &b) != RB_OK) {
        fprintf(stderr, "%s\n", rb_last_error());
        return 1;
    }
    if (rb_battery_size(b) != 4 || strlen(rb_battery_hash(b)) != 16) return 1;
    rb_battery_free(b);
    if (rb_battery_generate(7, 4, NULL) != RB_ERR_ARGUMENT) return 1;
    puts("ok");
    return 0;
}
