import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING")
LOG_DIR = os.getenv("LOG_DIR", os.path.join(os.getcwd(), "logs"))
FFT_WORKERS = int(os.getenv("FFT_WORKERS", "1"))
