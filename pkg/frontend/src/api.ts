/* Typed client for the engine's HTTP facade.  Every mutation travels as a
 * ReviewPatch; the client never invents state the server cannot rebuild. */

export interface DetectionDto {
  id: string;
  score: number;
  polygon: number[][];
  origin: "model" | "manual" | "imported";
  review: "unreviewed" | "accepted" | "edited" | "rejected";
}

export interface PageMetaDto {
  page_no: number;
  width: number;
  height: number;
  dpi: number;
  file: string;
  checksum: string;
}

export interface PageDto {
  page: PageMetaDto;
  image_url: string;
  version: number;
  backend_id: string;
  detections: DetectionDto[];
}

export interface ProjectSummaryDto {
  id: string;
  pages: number;
  dpi: number;
  source_kind: string;
  created_at: string;
}

export interface CardDto {
  card_id: string;
  detection_id: string;
  file: string;
  labels: { type: string; position: string; rotation: string };
  canonical: boolean;
  catalog_id: string | null;
  heads?: { type_p: number; position_p: number; rotation_p: number; source: string };
  image_url: string;
}

export interface HeadPayload {
  type_p: number;
  position_p: number;
  rotation_p: number;
  source: "human" | "model";
}

export interface ReviewPatch {
  detection_id: string;
  op: "accept" | "reject" | "replace_polygon" | "set_heads";
  payload?: number[][] | HeadPayload;
  version?: number;
}

export interface SharedConstants {
  head_threshold: number;
  positive_labels: { type: string; position: string; rotation: string };
  canonical: { position: string; rotation: string };
  flip_rule: { vertical_when_position: string; horizontal_when_rotation: string };
}

export interface LayoutSidecar {
  page: {
    width: number;
    height: number;
    margin: number;
    gutter: number;
    caption_height: number;
  };
  page_count: number;
  placements: {
    card_id: string;
    page_index: number;
    x: number;
    y: number;
    width: number;
    height: number;
  }[];
}

export type PatchOutcome =
  | { kind: "applied"; applied: number; versions: Record<string, number> }
  | { kind: "conflict"; pageNo: number; currentVersion: number; message: string }
  | { kind: "rejected"; message: string };

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      const body = await response.text();
      throw new Error(`GET ${path} -> ${response.status}: ${body}`);
    }
    return (await response.json()) as T;
  }

  listProjects(): Promise<ProjectSummaryDto[]> {
    return this.getJson("/api/projects");
  }

  getPage(projectId: string, pageNo: number): Promise<PageDto> {
    return this.getJson(`/api/projects/${projectId}/pages/${pageNo}`);
  }

  listCards(projectId: string, canonical?: boolean): Promise<CardDto[]> {
    const query = canonical === undefined ? "" : `?canonical=${canonical}`;
    return this.getJson(`/api/projects/${projectId}/cards${query}`);
  }

  getConstants(): Promise<SharedConstants> {
    return this.getJson("/api/constants");
  }

  async getLayout(projectId: string): Promise<LayoutSidecar | null> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/projects/${projectId}/layout`,
    );
    if (response.status === 404) {
      return null;
    }
    if (!response.ok) {
      throw new Error(`layout fetch failed: ${response.status}`);
    }
    return (await response.json()) as LayoutSidecar;
  }

  getCatalog(projectId: string): Promise<Record<string, string>[]> {
    return this.getJson(`/api/projects/${projectId}/catalog`);
  }

  async putCatalog(
    projectId: string,
    rows: Record<string, string>[],
  ): Promise<number> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/projects/${projectId}/catalog`,
      {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(rows),
      },
    );
    if (!response.ok) {
      throw new Error(`catalog update failed: ${response.status}`);
    }
    const body = (await response.json()) as { applied: number };
    return body.applied;
  }

  /** Submit one atomic batch of review patches. */
  async patchDetections(
    projectId: string,
    patches: ReviewPatch[],
  ): Promise<PatchOutcome> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/projects/${projectId}/detections`,
      {
        method: "PATCH",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(patches),
      },
    );
    if (response.status === 409) {
      const body = await response.json();
      return {
        kind: "conflict",
        pageNo: body.details?.page_no ?? 0,
        currentVersion: body.details?.current_version ?? 0,
        message: body.message ?? "page changed",
      };
    }
    if (!response.ok) {
      const body = await response.text();
      return { kind: "rejected", message: `${response.status}: ${body}` };
    }
    const body = (await response.json()) as {
      applied: number;
      versions: Record<string, number>;
    };
    return { kind: "applied", applied: body.applied, versions: body.versions };
  }
}
