/* Allreduce checks: int sum of rank ids plus a double max. */
#include <mpi.h>

int main(void) {
    int rank, size;
    if (MPI_Init(0, 0) != MPI_SUCCESS) return 10;
    MPI_Comm_rank(MPI_COMM_WORLD, &rank);
    MPI_Comm_size(MPI_COMM_WORLD, &size);

    int mine = rank + 1, total = 0;
    if (MPI_Allreduce(&mine, &total, 1, MPI_INT, MPI_SUM, MPI_COMM_WORLD))
        return 11;
    if (total != size * (size + 1) / 2) return 12;

    double d = 0.5 * rank, top = -1.0;
    if (MPI_Allreduce(&d, &top, 1, MPI_DOUBLE, MPI_MAX, MPI_COMM_WORLD))
        return 13;
    if (top != 0.5 * (size - 1)) return 14;

    return MPI_Finalize() ? 15 : 0;
}
