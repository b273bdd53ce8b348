/** Renders `mpi.h` from the embedder's ABI manifest. */

import type { Manifest } from "./manifest.js";

const DATATYPE_KEYS = [
  "MPI_BYTE", "MPI_CHAR", "MPI_INT", "MPI_FLOAT", "MPI_DOUBLE",
  "MPI_LONG", "MPI_UNSIGNED", "MPI_LONG_LONG", "MPI_UNSIGNED_LONG",
  "MPI_DATATYPE_NULL",
];
const COMM_KEYS = ["MPI_COMM_WORLD", "MPI_COMM_SELF", "MPI_COMM_NULL"];
const OP_KEYS = [
  "MPI_SUM", "MPI_MAX", "MPI_MIN", "MPI_PROD",
  "MPI_LAND", "MPI_LOR", "MPI_BAND", "MPI_BOR", "MPI_OP_NULL",
];
const PLAIN_KEYS = [
  "MPI_ANY_SOURCE", "MPI_ANY_TAG", "MPI_UNDEFINED",
  "MPI_SUCCESS", "MPI_ERR_TYPE", "MPI_ERR_COMM", "MPI_ERR_OP",
  "MPI_ERR_ARG", "MPI_ERR_OTHER",
];

// every routine the embedder resolves, with its exact C signature
const PROTOTYPES: Array<[string, string]> = [
  ["MPI_Init", "int MPI_Init(int *argc, char ***argv)"],
  ["MPI_Finalize", "int MPI_Finalize(void)"],
  ["MPI_Abort", "int MPI_Abort(MPI_Comm comm, int errorcode)"],
  ["MPI_Initialized", "int MPI_Initialized(int *flag)"],
  ["MPI_Finalized", "int MPI_Finalized(int *flag)"],
  ["MPI_Wtime", "double MPI_Wtime(void)"],
  ["MPI_Wtick", "double MPI_Wtick(void)"],
  ["MPI_Comm_rank", "int MPI_Comm_rank(MPI_Comm comm, int *rank)"],
  ["MPI_Comm_size", "int MPI_Comm_size(MPI_Comm comm, int *size)"],
  ["MPI_Send",
   "int MPI_Send(const void *buf, int count, MPI_Datatype datatype, int dest, int tag, MPI_Comm comm)"],
  ["MPI_Recv",
   "int MPI_Recv(void *buf, int count, MPI_Datatype datatype, int source, int tag, MPI_Comm comm, MPI_Status *status)"],
  ["MPI_Sendrecv",
   "int MPI_Sendrecv(const void *sendbuf, int sendcount, MPI_Datatype sendtype, int dest, int sendtag, void *recvbuf, int recvcount, MPI_Datatype recvtype, int source, int recvtag, MPI_Comm comm, MPI_Status *status)"],
  ["MPI_Isend",
   "int MPI_Isend(const void *buf, int count, MPI_Datatype datatype, int dest, int tag, MPI_Comm comm, MPI_Request *request)"],
  ["MPI_Irecv",
   "int MPI_Irecv(void *buf, int count, MPI_Datatype datatype, int source, int tag, MPI_Comm comm, MPI_Request *request)"],
  ["MPI_Wait", "int MPI_Wait(MPI_Request *request, MPI_Status *status)"],
  ["MPI_Waitall",
   "int MPI_Waitall(int count, MPI_Request *requests, MPI_Status *statuses)"],
  ["MPI_Barrier", "int MPI_Barrier(MPI_Comm comm)"],
  ["MPI_Bcast",
   "int MPI_Bcast(void *buf, int count, MPI_Datatype datatype, int root, MPI_Comm comm)"],
  ["MPI_Reduce",
   "int MPI_Reduce(const void *sendbuf, void *recvbuf, int count, MPI_Datatype datatype, MPI_Op op, int root, MPI_Comm comm)"],
  ["MPI_Allreduce",
   "int MPI_Allreduce(const void *sendbuf, void *recvbuf, int count, MPI_Datatype datatype, MPI_Op op, MPI_Comm comm)"],
  ["MPI_Gather",
   "int MPI_Gather(const void *sendbuf, int sendcount, MPI_Datatype sendtype, void *recvbuf, int recvcount, MPI_Datatype recvtype, int root, MPI_Comm comm)"],
  ["MPI_Allgather",
   "int MPI_Allgather(const void *sendbuf, int sendcount, MPI_Datatype sendtype, void *recvbuf, int recvcount, MPI_Datatype recvtype, MPI_Comm comm)"],
  ["MPI_Scatter",
   "int MPI_Scatter(const void *sendbuf, int sendcount, MPI_Datatype sendtype, void *recvbuf, int recvcount, MPI_Datatype recvtype, int root, MPI_Comm comm)"],
  ["MPI_Alltoall",
   "int MPI_Alltoall(const void *sendbuf, int sendcount, MPI_Datatype sendtype, void *recvbuf, int recvcount, MPI_Datatype recvtype, MPI_Comm comm)"],
  ["MPI_Comm_split",
   "int MPI_Comm_split(MPI_Comm comm, int color, int key, MPI_Comm *newcomm)"],
  ["MPI_Comm_dup", "int MPI_Comm_dup(MPI_Comm comm, MPI_Comm *newcomm)"],
  ["MPI_Comm_free", "int MPI_Comm_free(MPI_Comm *comm)"],
  ["MPI_Alloc_mem",
   "int MPI_Alloc_mem(MPI_Aint size, MPI_Info info, void *baseptr)"],
  ["MPI_Free_mem", "int MPI_Free_mem(void *base)"],
  ["MPI_Get_count",
   "int MPI_Get_count(const MPI_Status *status, MPI_Datatype datatype, int *count)"],
];

function defines(manifest: Manifest, keys: string[], cast: string): string {
  return keys
    .map((k) => `#define ${k} ((${cast})${manifest.get(k)})`)
    .join("\n");
}

export function generateHeader(manifest: Manifest): string {
  const statusSize = manifest.get("STATUS_SIZE");
  const protos = PROTOTYPES.map(
    ([name, sig]) => `MPIWASM_IMPORT(${name}) ${sig};`,
  ).join("\n");
  return `/* Generated from the embedder's ABI manifest (version ${manifest.get(
    "ABI_VERSION",
  )}). Do not edit. */
#ifndef MPIWASM_MPI_H
#define MPIWASM_MPI_H

typedef int MPI_Comm;
typedef int MPI_Datatype;
typedef int MPI_Op;
typedef int MPI_Request;
typedef int MPI_Aint;
typedef int MPI_Info;

typedef struct MPI_Status {
    int MPI_SOURCE;
    int MPI_TAG;
    int MPI_ERROR;
    int _count_bytes;
} MPI_Status;

_Static_assert(sizeof(MPI_Status) == ${statusSize},
               "MPI_Status layout out of step with the embedder");

${defines(manifest, COMM_KEYS, "MPI_Comm")}
${defines(manifest, DATATYPE_KEYS, "MPI_Datatype")}
${defines(manifest, OP_KEYS, "MPI_Op")}
#define MPI_REQUEST_NULL ((MPI_Request)${manifest.get("MPI_REQUEST_NULL")})
${PLAIN_KEYS.map((k) => `#define ${k} ${manifest.get(k)}`).join("\n")}
#define MPI_INFO_NULL ((MPI_Info)0)
#define MPI_STATUS_IGNORE ((MPI_Status *)0)
#define MPI_STATUSES_IGNORE ((MPI_Status *)0)

#define MPIWASM_IMPORT(name) \\
    __attribute__((import_module("env"), import_name(#name)))

${protos}

#undef MPIWASM_IMPORT
#endif /* MPIWASM_MPI_H */
`;
}
