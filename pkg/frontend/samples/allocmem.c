/* Exercises MPI_Alloc_mem/MPI_Free_mem as a bcast buffer. */
#include <mpi.h>

#define N 64

int main(void) {
    int rank;
    if (MPI_Init(0, 0) != MPI_SUCCESS) return 10;
    MPI_Comm_rank(MPI_COMM_WORLD, &rank);

    int *buf;
    if (MPI_Alloc_mem((MPI_Aint)(N * sizeof(int)), MPI_INFO_NULL, &buf))
        return 11;
    if (buf == 0) return 12;

    if (rank == 0)
        for (int i = 0; i < N; i++) buf[i] = 3 * i + 1;
    if (MPI_Bcast(buf, N, MPI_INT, 0, MPI_COMM_WORLD)) return 13;
    for (int i = 0; i < N; i++)
        if (buf[i] != 3 * i + 1) return 14;

    if (MPI_Free_mem(buf)) return 15;
    return MPI_Finalize() ? 16 : 0;
}
