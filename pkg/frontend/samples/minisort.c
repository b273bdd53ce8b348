/*
 * Tiny distributed sort: every rank contributes a deterministic chunk,
 * the root gathers and insertion-sorts the lot, then broadcasts the
 * result and everyone verifies order plus element conservation.
 */
#include <mpi.h>

#define CHUNK 16
#define MAXP 16

int main(void) {
    int rank, size;
    if (MPI_Init(0, 0) != MPI_SUCCESS) return 10;
    MPI_Comm_rank(MPI_COMM_WORLD, &rank);
    MPI_Comm_size(MPI_COMM_WORLD, &size);
    if (size > MAXP) return 11;

    int mine[CHUNK];
    unsigned int state = 12345u + 77u * rank;
    long long local_sum = 0;
    for (int i = 0; i < CHUNK; i++) {
        state = state * 1103515245u + 12345u;
        mine[i] = (int)(state % 1000u);
        local_sum += mine[i];
    }

    int all[MAXP * CHUNK];
    int n = size * CHUNK;
    if (MPI_Gather(mine, CHUNK, MPI_INT, all, CHUNK, MPI_INT, 0,
                   MPI_COMM_WORLD))
        return 12;

    if (rank == 0) {
        for (int i = 1; i < n; i++) {
            int v = all[i], j = i - 1;
            while (j >= 0 && all[j] > v) {
                all[j + 1] = all[j];
                j--;
            }
            all[j + 1] = v;
        }
    }
    if (MPI_Bcast(all, n, MPI_INT, 0, MPI_COMM_WORLD)) return 13;

    for (int i = 1; i < n; i++)
        if (all[i - 1] > all[i]) return 14;

    long long sorted_sum = 0;
    for (int i = 0; i < n; i++) sorted_sum += all[i];
    long long total = 0;
    if (MPI_Allreduce(&local_sum, &total, 1, MPI_LONG_LONG, MPI_SUM,
                      MPI_COMM_WORLD))
        return 15;
    if (sorted_sum != total) return 16;

    return MPI_Finalize() ? 17 : 0;
}
